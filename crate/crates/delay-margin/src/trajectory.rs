//! Concrete admissible delay perturbations `eta(t)`.
//!
//! Trajectories are stored piecewise-analytically (constant, linear and
//! sinusoidal-arc segments) so amplitude and slope checks are exact on
//! segment interiors; kinks contribute one-sided slopes only. Outside
//! the declared horizon `eta` extends by its boundary values, so
//! `tau(t) = h + eta(t)` is defined for every simulated time.

use rand::Rng;

use crate::error::{Error, Result};
use crate::system::{DelayCase, DelayUncertainty, DerivParam};

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind {
    Constant(f64),
    /// `eta(t) = value0 + slope * (t - t_start)` on the segment.
    Linear { value0: f64, slope: f64 },
    /// `eta(t) = amp * sin(omega * t + phase)` (absolute time).
    Sinusoid { amp: f64, omega: f64, phase: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub kind: SegmentKind,
}

/// A piecewise description of `eta(t)` on `[0, t_end]` plus the
/// uncertainty class it claims to belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTrajectory {
    segments: Vec<Segment>,
    t_end: f64,
    declared_mu: f64,
    declared_case: DelayCase,
    declared_p: DerivParam,
}

/// Slope slack used when checking the derivative bound on a grid.
pub const TOL_SLOPE: f64 = 1e-6;

impl DelayTrajectory {
    pub fn new(
        segments: Vec<Segment>,
        t_end: f64,
        declared_mu: f64,
        declared_case: DelayCase,
        declared_p: DerivParam,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("trajectory needs at least one segment".into()));
        }
        if segments[0].t_start != 0.0 {
            return Err(Error::InvalidInput("first segment must start at t = 0".into()));
        }
        if segments.windows(2).any(|w| w[1].t_start <= w[0].t_start) {
            return Err(Error::InvalidInput("segment start times must increase".into()));
        }
        if !(t_end > segments.last().unwrap().t_start) {
            return Err(Error::InvalidInput("horizon must extend past the last segment".into()));
        }
        let traj = Self {
            segments,
            t_end,
            declared_mu,
            declared_case,
            declared_p,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn constant(level: f64, t_end: f64, unc: &DelayUncertainty) -> Result<Self> {
        Self::new(
            vec![Segment {
                t_start: 0.0,
                kind: SegmentKind::Constant(level),
            }],
            t_end,
            unc.mu(),
            unc.case(),
            unc.p(),
        )
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn declared_mu(&self) -> f64 {
        self.declared_mu
    }

    pub fn declared_case(&self) -> DelayCase {
        self.declared_case
    }

    pub fn declared_p(&self) -> DerivParam {
        self.declared_p
    }

    /// Evaluate `eta(t)`, extending by boundary values outside `[0, t_end]`.
    pub fn eta(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_end);
        let idx = match self
            .segments
            .binary_search_by(|seg| seg.t_start.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[idx];
        match seg.kind {
            SegmentKind::Constant(v) => v,
            SegmentKind::Linear { value0, slope } => value0 + slope * (t - seg.t_start),
            SegmentKind::Sinusoid { amp, omega, phase } => amp * (omega * t + phase).sin(),
        }
    }

    /// The delay itself, `tau(t) = h + eta(t)`.
    pub fn tau(&self, t: f64, h: f64) -> f64 {
        h + self.eta(t)
    }

    /// Amplitude and (for cases A/C) upper slope checks on a dense grid.
    ///
    /// Only the upper derivative bound is enforced: the admissible
    /// classes constrain `d eta/dt <= 1 + p` almost everywhere and say
    /// nothing about downward slopes, so downward jumps pass for every
    /// case while upward jumps pass only for case B.
    pub fn validate(&self) -> Result<()> {
        const GRID: usize = 2000;
        let dt = self.t_end / GRID as f64;
        let amp_tol = 1e-9 * (1.0 + self.declared_mu);
        let mut prev = self.eta(0.0);
        if prev.abs() > self.declared_mu + amp_tol {
            return Err(Error::InvalidInput(format!(
                "|eta(0)| = {} exceeds declared mu = {}",
                prev.abs(),
                self.declared_mu
            )));
        }
        let slope_bound = match (self.declared_case, self.declared_p) {
            (DelayCase::B, _) => None,
            (_, DerivParam::Finite(p)) => Some(1.0 + p),
            (_, DerivParam::Infinite) => None,
        };
        for i in 1..=GRID {
            let t = i as f64 * dt;
            let v = self.eta(t);
            if v.abs() > self.declared_mu + amp_tol {
                return Err(Error::InvalidInput(format!(
                    "|eta({t})| = {} exceeds declared mu = {}",
                    v.abs(),
                    self.declared_mu
                )));
            }
            if let Some(d) = slope_bound {
                let quot = (v - prev) / dt;
                if quot > d + TOL_SLOPE + 1e-6 * d.abs() {
                    return Err(Error::InvalidInput(format!(
                        "slope {quot:.6} at t = {t:.6} exceeds bound d = {d}"
                    )));
                }
            }
            prev = v;
        }
        Ok(())
    }
}

/// Two-level switching trajectory: `-mu` up to `t_switch`, `+mu` after.
/// Only case B admits the upward jump.
pub fn switching_pair(mu: f64, t_switch: f64, t_end: f64) -> Result<DelayTrajectory> {
    DelayTrajectory::new(
        vec![
            Segment {
                t_start: 0.0,
                kind: SegmentKind::Constant(-mu),
            },
            Segment {
                t_start: t_switch,
                kind: SegmentKind::Constant(mu),
            },
        ],
        t_end,
        mu,
        DelayCase::B,
        DerivParam::Infinite,
    )
}

/// Piecewise-constant trajectory through the given `(switch_time, level)`
/// list; the first level starts at `t = 0`. Case B only.
pub fn piecewise_constant(
    mu: f64,
    first_level: f64,
    switches: &[(f64, f64)],
    t_end: f64,
) -> Result<DelayTrajectory> {
    let mut segments = vec![Segment {
        t_start: 0.0,
        kind: SegmentKind::Constant(first_level),
    }];
    for &(t, level) in switches {
        segments.push(Segment {
            t_start: t,
            kind: SegmentKind::Constant(level),
        });
    }
    DelayTrajectory::new(segments, t_end, mu, DelayCase::B, DerivParam::Infinite)
}

/// Triangular (sawtooth) wave between `-amp` and `+amp`, rising at
/// `up_slope` and falling at `down_slope` (both positive magnitudes).
pub fn sawtooth(
    amp: f64,
    up_slope: f64,
    down_slope: f64,
    t_end: f64,
    unc: &DelayUncertainty,
) -> Result<DelayTrajectory> {
    if !(amp > 0.0 && up_slope > 0.0 && down_slope > 0.0) {
        return Err(Error::InvalidInput("sawtooth needs positive amplitude and slopes".into()));
    }
    let mut segments = Vec::new();
    let mut t = 0.0;
    let mut rising = true;
    let mut level = -amp;
    while t < t_end {
        let (slope, target) = if rising {
            (up_slope, amp)
        } else {
            (-down_slope, -amp)
        };
        segments.push(Segment {
            t_start: t,
            kind: SegmentKind::Linear {
                value0: level,
                slope,
            },
        });
        let dt_seg = (target - level) / slope;
        t += dt_seg;
        level = target;
        rising = !rising;
    }
    DelayTrajectory::new(segments, t_end, unc.mu(), unc.case(), unc.p())
}

/// Draw a random admissible trajectory for the given uncertainty class.
///
/// The mix spans the admissible families: constants at the extremes,
/// sinusoids with the slope budget `amp * omega <= 1 + p` (any frequency
/// for case B), sawtooths with bounded up-slope, and, for case B only,
/// piecewise-constant switching. Down-slopes for cases A/C are capped at
/// `10 (1 + p)` purely to keep the integrators comfortable; the classes
/// themselves impose no lower bound.
pub fn random_for<R: Rng>(unc: &DelayUncertainty, t_end: f64, rng: &mut R) -> DelayTrajectory {
    let mu = unc.mu();
    if mu == 0.0 {
        return DelayTrajectory::constant(0.0, t_end, unc).expect("zero trajectory is valid");
    }
    let build = |rng: &mut R| -> Result<DelayTrajectory> {
        match unc.case() {
            DelayCase::B => match rng.random_range(0..4u8) {
                0 => {
                    let level = if rng.random_bool(0.5) { mu } else { -mu };
                    DelayTrajectory::constant(level, t_end, unc)
                }
                1 => {
                    let amp = rng.random_range(0.5 * mu..=mu);
                    let omega = rng.random_range(0.3 / mu..4.0 / mu);
                    let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                    DelayTrajectory::new(
                        vec![Segment {
                            t_start: 0.0,
                            kind: SegmentKind::Sinusoid { amp, omega, phase },
                        }],
                        t_end,
                        mu,
                        unc.case(),
                        unc.p(),
                    )
                }
                2 => {
                    let amp = rng.random_range(0.6 * mu..=mu);
                    let up = rng.random_range(0.5..8.0);
                    let down = rng.random_range(0.5..8.0);
                    sawtooth(amp, up, down, t_end, unc)
                }
                _ => {
                    // random switching levels with dwell times around mu
                    let mut switches = Vec::new();
                    let mut t = rng.random_range(0.3 * mu..1.5 * mu);
                    while t < t_end {
                        let level = if rng.random_bool(0.5) {
                            if rng.random_bool(0.5) {
                                mu
                            } else {
                                -mu
                            }
                        } else {
                            rng.random_range(-mu..=mu)
                        };
                        switches.push((t, level));
                        t += rng.random_range(0.4 * mu..1.6 * mu);
                    }
                    let first = rng.random_range(-mu..=mu);
                    piecewise_constant(mu, first, &switches, t_end)
                }
            },
            DelayCase::A | DelayCase::C => {
                let p = unc.p().finite().expect("cases A/C carry finite p");
                let d = 1.0 + p;
                match rng.random_range(0..3u8) {
                    0 => {
                        let level = if rng.random_bool(0.5) { mu } else { -mu };
                        DelayTrajectory::constant(level, t_end, unc)
                    }
                    1 => {
                        let amp = rng.random_range(0.5 * mu..=mu);
                        // amp * omega <= d, with headroom for the grid check
                        let omega_max = 0.98 * d / amp;
                        if omega_max <= 1e-9 {
                            DelayTrajectory::constant(mu, t_end, unc)
                        } else {
                            let omega = rng.random_range(0.1 * omega_max..=omega_max);
                            let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                            DelayTrajectory::new(
                                vec![Segment {
                                    t_start: 0.0,
                                    kind: SegmentKind::Sinusoid { amp, omega, phase },
                                }],
                                t_end,
                                mu,
                                unc.case(),
                                unc.p(),
                            )
                        }
                    }
                    _ => {
                        if d <= 1e-9 {
                            // p = -1 leaves no upward slope budget at all
                            return DelayTrajectory::constant(-mu, t_end, unc);
                        }
                        let amp = rng.random_range(0.5 * mu..=mu);
                        let up = rng.random_range(0.2 * d..0.95 * d);
                        let down = rng.random_range(0.5 * d..10.0 * d);
                        sawtooth(amp, up, down, t_end, unc)
                    }
                }
            }
        }
    };
    build(rng).expect("generated trajectory must be admissible")
}
