//! The delay-derivative-dependent gain bound `F(p)`, the integral
//! operator it bounds, worst-case input constructions and a randomized
//! gain oracle.
//!
//! The operator under study maps a signal `y` (vanishing for `t <= 0`)
//! to `z(t) = integral of y(s) ds over s in [t - h - eta(t), t - h]`.
//! Its squared L2 gain is bounded by `mu^2 F(p)` where `p` caps the
//! delay derivative via `d eta/dt <= 1 + p`; `F` ranges from 1 (at
//! `p = 0`, or anywhere on `[-1, 0)`) up to 7/4 (no derivative bound).

pub mod kernel;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::signal::{random_band_limited, Signal};
use crate::system::{DelayCase, DelayUncertainty, DerivParam};
use crate::trajectory::{switching_pair, DelayTrajectory};

/// Limit of the bound function as the derivative constraint is dropped.
pub const F_INFINITY: f64 = 1.75;

/// `F(inf) = 7/4` in exact form.
pub fn f_infinity_rational() -> Rational64 {
    Rational64::new(7, 4)
}

/// The gain-bound function `F(p)` on `[-1, +inf]`.
///
/// Piecewise: 1 on `[-1, 0)`, `(2p + 1)/(p + 1)` on `[0, 1)`,
/// `(7p - 1)/(4p)` on `[1, inf)`, and 7/4 at infinity. Increasing and
/// continuous on `[0, inf]`; both middle formulas give exactly 3/2 at
/// the branch point `p = 1`.
pub fn f_of_p(p: DerivParam) -> Result<f64> {
    match p {
        DerivParam::Infinite => Ok(F_INFINITY),
        DerivParam::Finite(p) => {
            if !p.is_finite() {
                return Err(Error::Domain(format!(
                    "p = {p} is not finite; use DerivParam::Infinite for the unconstrained case"
                )));
            }
            if p < -1.0 {
                Err(Error::Domain(format!("p = {p} is below -1")))
            } else if p < 0.0 {
                Ok(1.0)
            } else if p < 1.0 {
                Ok((2.0 * p + 1.0) / (p + 1.0))
            } else {
                Ok((7.0 * p - 1.0) / (4.0 * p))
            }
        }
    }
}

/// Exact-rational version of [`f_of_p`] for finite rational `p`.
pub fn f_of_p_rational(p: Rational64) -> Result<Rational64> {
    let one = Rational64::new(1, 1);
    if p < -one {
        return Err(Error::Domain(format!("p = {p} is below -1")));
    }
    let zero = Rational64::new(0, 1);
    if p < zero {
        Ok(one)
    } else if p < one {
        Ok((Rational64::new(2, 1) * p + one) / (p + one))
    } else {
        Ok((Rational64::new(7, 1) * p - one) / (Rational64::new(4, 1) * p))
    }
}

/// `F(p)` for an uncertainty description.
pub fn f_for(unc: &DelayUncertainty) -> f64 {
    f_of_p(unc.p()).expect("validated uncertainty has p in range")
}

/// Apply the delay-uncertainty operator:
/// `z(t) = integral of y over [t - h - eta(t), t - h]`, with `y`
/// treated as zero outside its grid (in particular for `t <= 0`).
///
/// `z` lives on the same grid as `y`. The moving endpoints are resolved
/// by linear interpolation of `y` inside a cell, so the quadrature is
/// exact for the piecewise-linear signal model and O(dt^2) overall.
pub fn delta_apply(y: &Signal, traj: &DelayTrajectory, h: f64) -> Result<Signal> {
    if y.t0().abs() > 1e-9 * y.dt() {
        return Err(Error::InvalidInput(format!(
            "operator input must start at t = 0, got t0 = {}",
            y.t0()
        )));
    }
    if traj.t_end() < y.end_time() - 1e-9 * y.dt() {
        return Err(Error::InvalidInput(format!(
            "horizon mismatch: trajectory ends at {} but signal runs to {}",
            traj.t_end(),
            y.end_time()
        )));
    }
    let n = y.len();
    let dim = y.dim();
    let dt = y.dt();

    // cumulative trapezoid: antiderivative of the piecewise-linear model
    let mut cum = vec![0.0; n * dim];
    for i in 1..n {
        let (prev, cur) = (y.sample(i - 1), y.sample(i));
        for k in 0..dim {
            cum[i * dim + k] = cum[(i - 1) * dim + k] + 0.5 * dt * (prev[k] + cur[k]);
        }
    }
    let total = |k: usize| cum[(n - 1) * dim + k];
    // antiderivative at an arbitrary time (0 before the grid, frozen after)
    let eval_cum = |s: f64, k: usize| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let x = s / dt;
        let i = x.floor() as usize;
        if i >= n - 1 {
            return total(k);
        }
        let frac = s - i as f64 * dt;
        let yi = y.sample(i)[k];
        let yn = y.sample(i + 1)[k];
        let ys = yi + (yn - yi) * (frac / dt);
        cum[i * dim + k] + 0.5 * frac * (yi + ys)
    };

    let mut data = vec![0.0; n * dim];
    for i in 0..n {
        let t = y.time(i);
        let upper = t - h;
        let lower = t - h - traj.eta(t);
        for k in 0..dim {
            data[i * dim + k] = eval_cum(upper, k) - eval_cum(lower, k);
        }
    }
    Signal::new(dt, 0.0, dim, data)
}

/// Gain ratio `|z|^2 / |y|^2` of one operator application, with the
/// convention that a zero input reports a ratio of zero.
pub fn gain_ratio(y: &Signal, traj: &DelayTrajectory, h: f64) -> Result<f64> {
    let denom = y.l2_norm_sq();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let z = delta_apply(y, traj, h)?;
    Ok(z.l2_norm_sq() / denom)
}

/// Step input paired with the constant perturbation `eta == mu`:
/// `y = 1` on `[0, theta]`. The pair drives the operator gain toward
/// its `F = 1` bound as `theta` grows; admissible in every delay class.
pub fn remark1_pair(theta: f64, mu: f64, dt: f64) -> Result<(Signal, DelayTrajectory)> {
    if !(theta > mu && mu > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step construction needs theta > mu > 0, got theta = {theta}, mu = {mu}"
        )));
    }
    let n = (theta / dt).round() as usize + 1;
    let y = Signal::scalar_from_fn(dt, 0.0, n, |_| 1.0)?;
    let unc = DelayUncertainty::new(mu, DelayCase::C, Some(0.0))?;
    let traj = DelayTrajectory::constant(mu, y.end_time() + dt, &unc)?;
    Ok((y, traj))
}

/// Triangle input paired with the two-level switching perturbation that
/// attains equality in the case-B gain bound at ratio `(3/2) mu^2`:
/// `y` rises at slope 1 on `[0, mu]`, falls at slope -1 on `[mu, 2mu]`;
/// `eta` jumps from `-mu` to `+mu` at `t = h + mu`. The signal grid is
/// padded to `h + 3 mu` so the operator output is captured in full.
pub fn remark3_pair(mu: f64, h: f64, dt: f64) -> Result<(Signal, DelayTrajectory)> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput(format!("mu = {mu} must be positive")));
    }
    if h < mu {
        return Err(Error::InvalidInput(format!(
            "switching construction needs h >= mu, got h = {h}, mu = {mu}"
        )));
    }
    let t_total = h + 3.0 * mu;
    let n = (t_total / dt).round() as usize + 3;
    let y = Signal::scalar_from_fn(dt, 0.0, n, |t| {
        if t <= mu {
            t
        } else if t <= 2.0 * mu {
            2.0 * mu - t
        } else {
            0.0
        }
    })?;
    let traj = switching_pair(mu, h + mu, y.end_time() + dt)?;
    Ok((y, traj))
}

/// Outcome of one randomized gain trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub index: u64,
    pub ratio: f64,
    pub trajectory: String,
    pub signal: String,
}

/// Run a single deterministic gain trial. Trial `0` for case B replays
/// the switching/triangle pair (the sharpest known input); all other
/// trials draw a random admissible trajectory and a random band-limited
/// signal from a stream derived from `(seed, index)`.
pub fn gain_trial(h: f64, unc: &DelayUncertainty, seed: u64, index: u64) -> Result<TrialOutcome> {
    let mu = unc.mu();
    if mu == 0.0 {
        return Ok(TrialOutcome {
            index,
            ratio: 0.0,
            trajectory: "eta == 0".into(),
            signal: "skipped (mu = 0)".into(),
        });
    }
    let dt = mu / 256.0;
    if unc.case() == DelayCase::B && index == 0 {
        let (y, traj) = remark3_pair(mu, h.max(mu), dt)?;
        let ratio = gain_ratio(&y, &traj, h.max(mu))?;
        return Ok(TrialOutcome {
            index,
            ratio,
            trajectory: "two-level switch at h + mu".into(),
            signal: "triangle on [0, 2 mu]".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let t_active = rng.random_range(8.0 * mu..16.0 * mu);
    let t_total = t_active + h + 2.0 * mu;
    let n = (t_total / dt).ceil() as usize + 2;
    let traj = crate::trajectory::random_for(unc, (n as f64 + 1.0) * dt, &mut rng);
    let base = random_band_limited(&mut rng, 1, dt, 0.0, n, 2.0 * mu)?;
    // taper to zero at the end of the active window so the whole operator
    // response fits on the padded grid
    let taper_start = t_active - 2.0 * mu;
    let y = Signal::from_fn(dt, 0.0, n, 1, |t, _| {
        let w = if t >= t_active {
            0.0
        } else if t > taper_start {
            let x = (t_active - t) / (2.0 * mu);
            x * x * (3.0 - 2.0 * x)
        } else {
            1.0
        };
        let i = (t / dt).round() as usize;
        w * base.sample(i)[0]
    })?;
    let ratio = gain_ratio(&y, &traj, h)?;
    Ok(TrialOutcome {
        index,
        ratio,
        trajectory: format!("random ({:?})", unc.case()),
        signal: format!("band-limited, {n} samples"),
    })
}

/// Counterexample record for a trial that broke the bound.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub trial: u64,
    pub ratio: f64,
    pub trajectory: String,
    pub signal: String,
}

/// Result of a randomized verification run of the gain bound.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub p: DerivParam,
    pub f_value: f64,
    pub gain_ratio_observed: f64,
    pub bound_value: f64,
    pub trials: u64,
    pub seed: u64,
    /// Quadrature slack admitted when comparing against the bound.
    pub tol_quadrature: f64,
    pub counterexample: Option<Counterexample>,
}

impl BoundReport {
    pub fn to_json(&self) -> serde_json::Value {
        let p = match self.p {
            DerivParam::Finite(p) => serde_json::json!(p),
            DerivParam::Infinite => serde_json::json!("inf"),
        };
        serde_json::json!({
            "p": p,
            "F": self.f_value,
            "bound": self.bound_value,
            "observed_sup": self.gain_ratio_observed,
            "trials": self.trials,
            "seed": self.seed,
            "tol_quadrature": self.tol_quadrature,
            "counterexample": self.counterexample.as_ref().map(|c| serde_json::json!({
                "trial": c.trial,
                "ratio": c.ratio,
                "trajectory": c.trajectory,
                "signal": c.signal,
            })),
        })
    }
}

/// Monte-Carlo verification of `|z|^2 <= mu^2 F(p) |y|^2` over random
/// admissible trajectory/signal pairs. Deterministic for a fixed seed;
/// trials run in parallel under the `parallel` feature.
pub fn empirical_gain(
    sys_h: f64,
    unc: &DelayUncertainty,
    trials: u64,
    seed: u64,
) -> Result<BoundReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    let f_value = f_for(unc);
    let mu = unc.mu();
    let bound_value = mu * mu * f_value;
    let dt = mu / 256.0;
    let tol_quadrature = if mu > 0.0 { 5.0 * dt / mu } else { 0.0 };

    let outcomes = par::map_indexed(trials as usize, |i| gain_trial(sys_h, unc, seed, i as u64));
    let mut observed: f64 = 0.0;
    let mut counterexample: Option<Counterexample> = None;
    for outcome in outcomes {
        let o = outcome?;
        observed = observed.max(o.ratio);
        if o.ratio > bound_value * (1.0 + tol_quadrature)
            && counterexample.as_ref().is_none_or(|c| o.index < c.trial)
        {
            counterexample = Some(Counterexample {
                trial: o.index,
                ratio: o.ratio,
                trajectory: o.trajectory,
                signal: o.signal,
            });
        }
    }
    Ok(BoundReport {
        p: unc.p(),
        f_value,
        gain_ratio_observed: observed,
        bound_value,
        trials,
        seed,
        tol_quadrature,
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case_c(mu: f64, p: f64) -> DelayUncertainty {
        DelayUncertainty::new(mu, DelayCase::C, Some(p)).unwrap()
    }

    mod f_of_p_values {
        use super::*;

        #[test]
        fn matches_the_published_table_exactly() {
            let r = |n, d| Rational64::new(n, d);
            assert_eq!(f_of_p_rational(r(1, 10)).unwrap(), r(12, 11));
            assert_eq!(f_of_p_rational(r(1, 2)).unwrap(), r(4, 3));
            assert_eq!(f_of_p_rational(r(1, 1)).unwrap(), r(3, 2));
            assert_eq!(f_infinity_rational(), r(7, 4));
            assert_eq!(f_of_p_rational(r(0, 1)).unwrap(), r(1, 1));
            assert_eq!(f_of_p_rational(r(-1, 2)).unwrap(), r(1, 1));
        }

        #[test]
        fn float_agrees_with_rational_branches() {
            for &(num, den) in &[(0i64, 1i64), (1, 10), (1, 2), (9, 10), (1, 1), (3, 2), (7, 1)] {
                let p = num as f64 / den as f64;
                let exact = f_of_p_rational(Rational64::new(num, den)).unwrap();
                let exact = *exact.numer() as f64 / *exact.denom() as f64;
                assert_relative_eq!(f_of_p(DerivParam::Finite(p)).unwrap(), exact, epsilon = 1e-15);
            }
        }

        #[test]
        fn branch_point_is_continuous() {
            // both closed forms at p = 1 give 3/2
            let low = (2.0 * 1.0 + 1.0) / (1.0 + 1.0);
            let high = (7.0 * 1.0 - 1.0) / (4.0 * 1.0);
            assert_eq!(low, 1.5);
            assert_eq!(high, 1.5);
            for eps in [1e-3, 1e-6, 1e-9] {
                let below = f_of_p(DerivParam::Finite(1.0 - eps)).unwrap();
                let above = f_of_p(DerivParam::Finite(1.0 + eps)).unwrap();
                assert!((below - above).abs() < 4.0 * eps);
            }
        }

        #[test]
        fn monotone_and_strictly_inside_the_limits() {
            let mut prev = f_of_p(DerivParam::Finite(0.0)).unwrap();
            assert_eq!(prev, 1.0);
            for i in 1..=60 {
                let p = 10f64.powf(-2.0 + 4.0 * i as f64 / 60.0);
                let f = f_of_p(DerivParam::Finite(p)).unwrap();
                assert!(f >= prev, "F must be non-decreasing, p = {p}");
                assert!(f > 1.0 && f < F_INFINITY, "1 < F(p) < 7/4 violated at p = {p}");
                prev = f;
            }
        }

        #[test]
        fn rejects_p_below_minus_one() {
            assert!(f_of_p(DerivParam::Finite(-1.5)).is_err());
            assert!(f_of_p_rational(Rational64::new(-3, 2)).is_err());
            assert!(f_of_p(DerivParam::Finite(f64::INFINITY)).is_err());
        }
    }

    mod delta {
        use super::*;

        /// Direct per-sample quadrature of the window integral: the same
        /// piecewise-linear signal model as `delta_apply`, summed cell by
        /// cell without the cumulative shortcut. Test-only oracle.
        fn delta_bruteforce(y: &Signal, traj: &DelayTrajectory, h: f64) -> Signal {
            let n = y.len();
            let dt = y.dt();
            let dim = y.dim();
            let value_at = |s: f64, k: usize| -> f64 {
                if s <= 0.0 || s >= y.end_time() {
                    let i = (s / dt).floor() as isize;
                    if i < 0 || i as usize >= n - 1 {
                        return if s == y.end_time() { y.sample(n - 1)[k] } else { 0.0 };
                    }
                }
                let i = ((s / dt).floor() as usize).min(n - 2);
                let frac = (s - i as f64 * dt) / dt;
                let a = y.sample(i)[k];
                let b = y.sample(i + 1)[k];
                a + (b - a) * frac
            };
            let window = |a: f64, b: f64, k: usize| -> f64 {
                // oriented integral over [a, b] of the piecewise-linear model
                let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
                let lo_c = lo.max(0.0);
                let hi_c = hi.min(y.end_time());
                if hi_c <= lo_c {
                    return 0.0;
                }
                let mut acc = 0.0;
                let mut s = lo_c;
                while s < hi_c - 1e-15 {
                    let cell_end = ((s / dt).floor() + 1.0) * dt;
                    let e = cell_end.min(hi_c);
                    acc += 0.5 * (e - s) * (value_at(s, k) + value_at(e, k));
                    s = e;
                }
                sign * acc
            };
            let mut data = vec![0.0; n * dim];
            for i in 0..n {
                let t = y.time(i);
                let upper = t - h;
                let lower = t - h - traj.eta(t);
                for k in 0..dim {
                    data[i * dim + k] = window(lower, upper, k);
                }
            }
            Signal::new(dt, 0.0, dim, data).unwrap()
        }

        #[test]
        fn zero_in_zero_out() {
            let unc = case_c(1.0, 0.0);
            let y = Signal::zeros(0.05, 0.0, 100, 2).unwrap();
            let traj = DelayTrajectory::constant(1.0, 10.0, &unc).unwrap();
            let z = delta_apply(&y, &traj, 1.0).unwrap();
            assert_eq!(z.l2_norm_sq(), 0.0);
        }

        #[test]
        fn horizon_mismatch_is_rejected() {
            let unc = case_c(1.0, 0.0);
            let y = Signal::zeros(0.05, 0.0, 100, 1).unwrap();
            let traj = DelayTrajectory::constant(1.0, 2.0, &unc).unwrap();
            assert!(delta_apply(&y, &traj, 1.0).is_err());
        }

        #[test]
        fn step_input_constant_eta_truncated_energy() {
            // y = 1 on [0, theta], eta == mu, h = 1: on the signal's own
            // grid the response ramps over [h, h + mu] and then holds at
            // mu, so |z/mu|^2 = (theta - h - mu) + mu/3.
            let (theta, mu, h, dt) = (10.0, 1.0, 1.0, 1e-3);
            let (y, traj) = remark1_pair(theta, mu, dt).unwrap();
            let z = delta_apply(&y, &traj, h).unwrap();
            let expect = (theta - h - mu) + mu / 3.0;
            assert_relative_eq!(z.l2_norm_sq() / (mu * mu), expect, max_relative = 5e-3);
        }

        #[test]
        fn matches_bruteforce_on_coarse_grids() {
            use rand::SeedableRng;
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for trial in 0..12 {
                let unc = if trial % 2 == 0 {
                    case_c(0.8, 0.5)
                } else {
                    DelayUncertainty::case_b(0.8).unwrap()
                };
                let n = 60 + 10 * (trial % 8) as usize; // <= 200 samples
                let dt = 0.08;
                let traj = crate::trajectory::random_for(&unc, (n as f64 + 2.0) * dt, &mut rng);
                let y = random_band_limited(&mut rng, 2, dt, 0.0, n, 0.4).unwrap();
                let fast = delta_apply(&y, &traj, 1.0).unwrap();
                let slow = delta_bruteforce(&y, &traj, 1.0);
                let scale = slow
                    .data()
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
                    .max(1e-30);
                for (a, b) in fast.data().iter().zip(slow.data()) {
                    assert!(
                        (a - b).abs() <= 1e-10 * scale,
                        "trial {trial}: {a} vs {b} (scale {scale})"
                    );
                }
            }
        }
    }

    mod remark_pairs {
        use super::*;

        #[test]
        fn step_pair_rejects_theta_at_mu() {
            assert!(remark1_pair(1.0, 1.0, 1e-3).is_err());
        }

        #[test]
        fn step_ratio_at_theta_10() {
            // truncated to the signal grid: ((theta - h - mu) + mu/3)/theta
            let (y, traj) = remark1_pair(10.0, 1.0, 1e-3).unwrap();
            let ratio = gain_ratio(&y, &traj, 1.0).unwrap();
            let expect = (10.0 - 1.0 - 1.0 + 1.0 / 3.0) / 10.0;
            assert_relative_eq!(ratio, expect, max_relative = 5e-3);
        }

        #[test]
        fn step_ratio_approaches_one() {
            let (y, traj) = remark1_pair(100.0, 1.0, 1e-3).unwrap();
            let ratio = gain_ratio(&y, &traj, 1.0).unwrap();
            assert!((1.0 - ratio).abs() < 0.02, "ratio {ratio} not within 2% of 1");
            assert!(ratio > 0.97);
        }

        #[test]
        fn triangle_norm_and_equality() {
            let (mu, h, dt) = (1.0, 1.0, 1e-4);
            let (y, traj) = remark3_pair(mu, h, dt).unwrap();
            assert!((y.l2_norm_sq() - 2.0 / 3.0).abs() < 1e-4);
            // equality in the gain inequality at F = 3/2:
            // |u|^2 = |z|^2 / (mu^2 * 3/2) equals |y|^2
            let z = delta_apply(&y, &traj, h).unwrap();
            let u_sq = z.l2_norm_sq() / (mu * mu * 1.5);
            assert_relative_eq!(u_sq, 2.0 / 3.0, max_relative = 5e-3);
        }

        #[test]
        fn triangle_ratio_scales_with_mu_squared() {
            let (mu, h, dt) = (2.0, 2.0, 2e-4);
            let (y, traj) = remark3_pair(mu, h, dt).unwrap();
            let ratio = gain_ratio(&y, &traj, h).unwrap();
            assert_relative_eq!(ratio, 1.5 * mu * mu, max_relative = 5e-3);
        }

        #[test]
        fn triangle_rejects_h_below_mu() {
            assert!(remark3_pair(1.0, 0.5, 1e-3).is_err());
        }
    }

    mod gain_oracle {
        use super::*;

        #[test]
        fn zero_signal_reports_zero_ratio() {
            let unc = case_c(1.0, 0.0);
            let y = Signal::zeros(0.01, 0.0, 50, 1).unwrap();
            let traj = DelayTrajectory::constant(1.0, 10.0, &unc).unwrap();
            assert_eq!(gain_ratio(&y, &traj, 1.0).unwrap(), 0.0);
        }

        #[test]
        fn case_c_p0_respects_unit_bound() {
            let unc = case_c(1.0, 0.0);
            let report = empirical_gain(1.0, &unc, 60, 31).unwrap();
            assert!(report.counterexample.is_none(), "{:?}", report.counterexample);
            assert!(
                report.gain_ratio_observed <= report.bound_value * (1.0 + report.tol_quadrature)
            );
            assert!(report.gain_ratio_observed > 0.0);
        }

        #[test]
        fn case_b_sup_sits_between_known_extremes() {
            let unc = DelayUncertainty::case_b(1.0).unwrap();
            let report = empirical_gain(1.0, &unc, 60, 17).unwrap();
            assert!(report.counterexample.is_none(), "{:?}", report.counterexample);
            // trial 0 replays the equality pair, so the sup is at least 3/2
            assert!(report.gain_ratio_observed >= 1.5 * (1.0 - 2e-3));
            assert!(report.gain_ratio_observed <= 1.75 * (1.0 + report.tol_quadrature));
        }

        #[test]
        fn deterministic_for_fixed_seed() {
            let unc = DelayUncertainty::case_b(0.5).unwrap();
            let a = empirical_gain(1.0, &unc, 16, 5).unwrap();
            let b = empirical_gain(1.0, &unc, 16, 5).unwrap();
            assert_eq!(a.gain_ratio_observed, b.gain_ratio_observed);
            let c = empirical_gain(1.0, &unc, 16, 6).unwrap();
            assert_ne!(a.gain_ratio_observed, c.gain_ratio_observed);
        }
    }
}
