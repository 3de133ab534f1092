//! Time-domain integration of the delayed system under concrete
//! admissible delay trajectories.
//!
//! Decay observed here corroborates a computed margin but never
//! certifies one; a diverging run, by contrast, is a certified
//! counterexample to stability at that radius.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::signal::{random_band_limited, Signal};
use crate::system::{DelayUncertainty, LtiDelaySystem};
use crate::trajectory::{random_for, DelayTrajectory};

/// State-norm threshold that aborts a run as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// One completed (or aborted) integration.
#[derive(Debug, Clone)]
pub struct DdeRun {
    pub dt: f64,
    /// State trajectory on `[0, T]` (truncated at the abort time if the
    /// run diverged — never silent infinities).
    pub trajectory_out: Signal,
    /// Delay `tau(t)` sampled on the same grid.
    pub taus: Vec<f64>,
    /// Least-squares slope of `log |x(t)|` over the final half of the
    /// horizon; `+inf` for diverged runs.
    pub decay_estimate: f64,
    /// Blow-up time when the run aborted.
    pub diverged: Option<f64>,
}

/// Cubic 4-point Lagrange interpolation on a uniform grid.
///
/// `values` holds dim-interleaved samples with index 0 at time `t_base`;
/// `filled` is the number of valid samples. The stencil is clamped at
/// the boundaries, so extrapolation never happens silently.
fn interp_cubic(values: &[f64], dim: usize, t_base: f64, dt: f64, filled: usize, t: f64, out: &mut [f64]) {
    let x = (t - t_base) / dt;
    let i = (x.floor() as isize).clamp(0, filled as isize - 2) as usize;
    let u = x - i as f64;
    // stencil i-1 .. i+2, clamped
    let im1 = i.saturating_sub(1);
    let ip1 = (i + 1).min(filled - 1);
    let ip2 = (i + 2).min(filled - 1);
    let (w0, w1, w2, w3) = if i == 0 || ip2 == ip1 {
        // fall back to linear at the edges of the available data
        (0.0, 1.0 - u, u, 0.0)
    } else {
        (
            -u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0,
        )
    };
    for k in 0..dim {
        out[k] = w0 * values[im1 * dim + k]
            + w1 * values[i * dim + k]
            + w2 * values[ip1 * dim + k]
            + w3 * values[ip2 * dim + k];
    }
}

/// Integrate `dx/dt = A0 x(t) + A1 x(t - tau(t))` with classical RK4
/// and cubic interpolation of the stored past at the delayed argument.
///
/// The history signal must share the step `dt`, end at `t = 0`, and
/// reach back at least `h + mu`. The delayed argument stays at least
/// `2 dt` in the past (enforced via `h - mu >= 2 dt`), so every stage
/// reads already-computed data and no implicit solve arises.
pub fn dde_integrate(
    sys: &LtiDelaySystem,
    traj: &DelayTrajectory,
    history: &Signal,
    dt: f64,
    t_end: f64,
) -> Result<DdeRun> {
    let n = sys.n();
    let h = sys.h();
    if history.dim() != n {
        return Err(Error::Dimension(format!(
            "history dimension {} does not match state dimension {n}",
            history.dim()
        )));
    }
    if dt > h / 20.0 {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} too coarse; need dt <= h/20 = {}",
            h / 20.0
        )));
    }
    if (history.dt() - dt).abs() > 1e-9 * dt {
        return Err(Error::InvalidInput(
            "history must be sampled on the integration grid".into(),
        ));
    }
    if history.end_time().abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "history must end at t = 0, ends at {}",
            history.end_time()
        )));
    }
    let mu = traj.declared_mu();
    if history.t0() > -(h + mu) + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "history starts at {} but must cover [-(h + mu), 0] = [{}, 0]",
            history.t0(),
            -(h + mu)
        )));
    }
    if h - mu < 2.0 * dt {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} too large for the minimal delay h - mu = {}",
            h - mu
        )));
    }
    if traj.t_end() < t_end {
        return Err(Error::InvalidInput(
            "trajectory horizon shorter than the integration horizon".into(),
        ));
    }

    let steps = (t_end / dt).round() as usize;
    let hist_len = history.len();
    let t_base = history.t0();
    let mut values: Vec<f64> = Vec::with_capacity((hist_len + steps) * n);
    values.extend_from_slice(history.data());
    let mut filled = hist_len;

    let a0 = sys.a0();
    let a1 = sys.a1();
    let mut delayed = vec![0.0; n];
    let deriv = |x: &DVector<f64>, t: f64, values: &[f64], filled: usize, delayed: &mut [f64]| {
        let arg = t - (h + traj.eta(t));
        interp_cubic(values, n, t_base, dt, filled, arg, delayed);
        let mut dx = DVector::zeros(n);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += a0[(i, j)] * x[j] + a1[(i, j)] * delayed[j];
            }
            dx[i] = acc;
        }
        dx
    };

    let mut x = DVector::from_fn(n, |i, _| history.sample(hist_len - 1)[i]);
    let mut diverged = None;
    for step in 0..steps {
        let t = step as f64 * dt;
        let k1 = deriv(&x, t, &values, filled, &mut delayed);
        let k2 = deriv(&(&x + &k1 * (0.5 * dt)), t + 0.5 * dt, &values, filled, &mut delayed);
        let k3 = deriv(&(&x + &k2 * (0.5 * dt)), t + 0.5 * dt, &values, filled, &mut delayed);
        let k4 = deriv(&(&x + &k3 * dt), t + dt, &values, filled, &mut delayed);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let norm = x.norm();
        if !norm.is_finite() || norm > DIVERGENCE_BOUND {
            diverged = Some(t + dt);
            break;
        }
        values.extend(x.iter());
        filled += 1;
    }

    let out_samples = filled - hist_len + 1; // includes t = 0
    let out_data: Vec<f64> = values[(hist_len - 1) * n..filled * n].to_vec();
    let trajectory_out = Signal::new(dt, 0.0, n, out_data)?;
    let taus: Vec<f64> = (0..out_samples).map(|i| traj.tau(i as f64 * dt, h)).collect();

    let decay_estimate = if diverged.is_some() {
        f64::INFINITY
    } else {
        decay_rate(&trajectory_out)
    };
    Ok(DdeRun {
        dt,
        trajectory_out,
        taus,
        decay_estimate,
        diverged,
    })
}

/// Least-squares slope of `log |x(t)|` over the final half of the run.
fn decay_rate(x: &Signal) -> f64 {
    let n = x.len();
    let start = n / 2;
    let m = n - start;
    if m < 2 {
        return 0.0;
    }
    let mut tbar = 0.0;
    let mut ybar = 0.0;
    let logs: Vec<(f64, f64)> = (start..n)
        .map(|i| {
            let t = x.time(i);
            let y = x.sample_norm(i).max(1e-280).ln();
            (t, y)
        })
        .collect();
    for &(t, y) in &logs {
        tbar += t;
        ybar += y;
    }
    tbar /= m as f64;
    ybar /= m as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, y) in &logs {
        num += (t - tbar) * (y - ybar);
        den += (t - tbar) * (t - tbar);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Band-limited random history on `[-(h + mu) - 2 dt, 0]`, aligned to
/// the integration grid.
pub fn random_history<R: rand::Rng>(
    rng: &mut R,
    sys: &LtiDelaySystem,
    mu: f64,
    dt: f64,
) -> Result<Signal> {
    let span = sys.h() + mu + 2.0 * dt;
    let samples = (span / dt).ceil() as usize + 1;
    let t0 = -((samples - 1) as f64) * dt;
    random_band_limited(rng, sys.n(), dt, t0, samples, 0.2 * span)
}

#[derive(Debug, Clone)]
pub struct ProbePoint {
    pub mu: f64,
    pub decayed: usize,
    pub diverged: usize,
    pub nondecaying: usize,
    /// Largest (worst) decay estimate among non-diverged trials.
    pub worst_rate: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub points: Vec<ProbePoint>,
    pub trials_per_mu: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
}

impl ProbeReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "trials_per_mu": self.trials_per_mu,
            "seed": self.seed,
            "dt": self.dt,
            "T": self.t_end,
            "points": self.points.iter().map(|p| serde_json::json!({
                "mu": p.mu,
                "decayed": p.decayed,
                "diverged": p.diverged,
                "nondecaying": p.nondecaying,
                "worst_rate": if p.worst_rate.is_finite() { serde_json::json!(p.worst_rate) } else { serde_json::json!(null) },
            })).collect::<Vec<_>>(),
        })
    }
}

/// Random-trajectory stability probe over a grid of radii.
///
/// Decay in every trial is evidence for (not proof of) stability at
/// that radius; any divergent trial is a certified counterexample.
pub fn margin_probe(
    sys: &LtiDelaySystem,
    template: &DelayUncertainty,
    mu_grid: &[f64],
    trials_per_mu: usize,
    seed: u64,
    dt: f64,
    t_end: f64,
) -> Result<ProbeReport> {
    let mut points = Vec::with_capacity(mu_grid.len());
    for (pi, &mu) in mu_grid.iter().enumerate() {
        let unc = template.with_mu(mu)?;
        unc.check_against(sys)?;
        let runs = par::map_indexed(trials_per_mu, |ti| -> Result<(bool, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((pi as u64) << 32 | ti as u64);
            let traj = random_for(&unc, t_end + dt, &mut rng);
            let history = random_history(&mut rng, sys, mu, dt)?;
            let run = dde_integrate(sys, &traj, &history, dt, t_end)?;
            Ok((run.diverged.is_some(), run.decay_estimate))
        });
        let mut point = ProbePoint {
            mu,
            decayed: 0,
            diverged: 0,
            nondecaying: 0,
            worst_rate: f64::NEG_INFINITY,
        };
        for r in runs {
            let (div, rate) = r?;
            if div {
                point.diverged += 1;
            } else {
                if rate < 0.0 {
                    point.decayed += 1;
                } else {
                    point.nondecaying += 1;
                }
                point.worst_rate = point.worst_rate.max(rate);
            }
        }
        points.push(point);
    }
    Ok(ProbeReport {
        points,
        trials_per_mu,
        seed,
        dt,
        t_end,
    })
}
