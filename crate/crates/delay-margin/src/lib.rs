//! Robust stability margins for linear systems with an uncertain,
//! bounded, time-varying delay.
//!
//! The plant is `dx/dt = A0 x(t) + A1 x(t - tau(t))` with
//! `tau(t) = h + eta(t)`, `|eta(t)| <= mu <= h`. Delay classes are
//! distinguished by the upper bound `d = 1 + p` on the delay derivative:
//! case A (`d < 1`, slowly varying), case C (`d >= 1`, moderately
//! varying) and case B (no derivative constraint, fast varying).
//!
//! The toolbox computes and cross-checks three kinds of evidence:
//!
//! * an L2-gain bound `mu^2 F(p)` on the uncertainty operator
//!   `(Delta y)(t) = integral of y over [t-h-eta(t), t-h]`, together
//!   with Monte-Carlo gain probes and a kernel-area oracle
//!   ([`bounds`]);
//! * a frequency-domain small-gain margin built on an H-infinity sweep
//!   of the scaled transfer matrix ([`frequency`]);
//! * a time-domain margin from a descriptor-form LMI feasibility
//!   problem, maximized over `mu` by bisection ([`lmi`]);
//! * direct time-domain integration of the delayed system as
//!   corroborating (never certifying) evidence ([`sim`]).
//!
//! All randomized components are deterministic given a seed, and
//! parallel execution (the `parallel` feature, on by default) does not
//! change any result.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod frequency;
pub mod lmi;
pub mod par;
pub mod report;
pub mod signal;
pub mod sim;
pub mod system;
pub mod trajectory;

pub use error::{Error, Result};
pub use signal::Signal;
pub use system::{DelayCase, DelayUncertainty, DerivParam, LtiDelaySystem};
pub use trajectory::DelayTrajectory;
