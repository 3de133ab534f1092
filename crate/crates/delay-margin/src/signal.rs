//! Uniformly sampled vector-valued signals on a finite horizon.

use rand::Rng;

use crate::error::{Error, Result};

/// A finite-horizon signal sampled on a uniform grid.
///
/// Samples are stored interleaved (`data[i * dim + k]` is component `k`
/// at grid index `i`). Between samples the signal is understood as the
/// piecewise-linear interpolant; quadrature below is consistent with
/// that model (trapezoidal, O(dt^2)). Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dt: f64,
    t0: f64,
    dim: usize,
    data: Vec<f64>,
}

impl Signal {
    pub fn new(dt: f64, t0: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("sample spacing dt = {dt} must be positive")));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("signal dimension must be >= 1".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "data length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        if data.len() / dim < 2 {
            return Err(Error::InvalidInput("signal needs at least 2 samples".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("signal contains non-finite samples".into()));
        }
        Ok(Self { dt, t0, dim, data })
    }

    /// Build from a function of (time, component index).
    pub fn from_fn<F>(dt: f64, t0: f64, samples: usize, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> f64,
    {
        let mut data = Vec::with_capacity(samples * dim);
        for i in 0..samples {
            let t = t0 + i as f64 * dt;
            for k in 0..dim {
                data.push(f(t, k));
            }
        }
        Self::new(dt, t0, dim, data)
    }

    /// Scalar convenience constructor.
    pub fn scalar_from_fn<F>(dt: f64, t0: f64, samples: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        Self::from_fn(dt, t0, samples, 1, |t, _| f(t))
    }

    pub fn zeros(dt: f64, t0: f64, samples: usize, dim: usize) -> Result<Self> {
        Self::new(dt, t0, dim, vec![0.0; samples * dim])
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees >= 2 samples
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Euclidean norm of sample `i`.
    pub fn sample_norm(&self, i: usize) -> f64 {
        self.sample(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared L2 norm: trapezoidal approximation of the integral of
    /// `|s(t)|^2` over the horizon. Zero exactly when all samples are zero.
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let sq: f64 = self.sample(i).iter().map(|v| v * v).sum();
            acc += w * sq;
        }
        acc * self.dt
    }

    /// Map every sample entry through `f` (used by tests and scaling laws).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        Signal {
            dt: self.dt,
            t0: self.t0,
            dim: self.dim,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Squared L2 norm of a signal (free-function form of [`Signal::l2_norm_sq`]).
pub fn l2_norm_sq(s: &Signal) -> f64 {
    s.l2_norm_sq()
}

/// Random band-limited test signal: per component a sum of up to 8
/// sinusoids with random amplitudes, angular frequencies bounded by
/// `1/(4 dt)` and random phases, multiplied by a smooth ramp of length
/// `ramp` so the signal starts from zero (the operator bounds assume
/// the input vanishes for t <= 0).
pub fn random_band_limited<R: Rng>(
    rng: &mut R,
    dim: usize,
    dt: f64,
    t0: f64,
    samples: usize,
    ramp: f64,
) -> Result<Signal> {
    let omega_hi = 1.0 / (4.0 * dt);
    let horizon = (samples.max(2) - 1) as f64 * dt;
    let omega_lo = (2.0 * std::f64::consts::PI / horizon).min(omega_hi / 100.0);
    let mut comps: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let k = rng.random_range(1..=8usize);
        let mut terms = Vec::with_capacity(k);
        for _ in 0..k {
            let amp = rng.random_range(0.2..1.0);
            // log-uniform frequency draw so slow and fast content both appear
            let u: f64 = rng.random_range(0.0..1.0);
            let omega = omega_lo * (omega_hi / omega_lo).powf(u);
            let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            terms.push((amp, omega, phase));
        }
        comps.push(terms);
    }
    Signal::from_fn(dt, t0, samples, dim, |t, k| {
        let rel = t - t0;
        let w = if ramp <= 0.0 {
            1.0
        } else {
            let x = (rel / ramp).clamp(0.0, 1.0);
            // smoothstep window: C^1 at both ends of the ramp
            x * x * (3.0 - 2.0 * x)
        };
        let v: f64 = comps[k]
            .iter()
            .map(|&(a, om, ph)| a * (om * t + ph).sin())
            .sum();
        w * v
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_signal_has_zero_norm() {
        let s = Signal::zeros(0.1, 0.0, 50, 3).unwrap();
        assert_eq!(s.l2_norm_sq(), 0.0);
    }

    #[test]
    fn unit_step_norm_matches_horizon_length() {
        // |s|^2 integrated over [0, 5] for s == 1 is 5.
        let theta = 5.0f64;
        let dt = 1e-3;
        let n = (theta / dt).round() as usize + 1;
        let s = Signal::scalar_from_fn(dt, 0.0, n, |_| 1.0).unwrap();
        assert_relative_eq!(s.l2_norm_sq(), theta, max_relative = 1e-6);
    }

    #[test]
    fn triangle_norm_is_two_thirds_mu_cubed() {
        let mu = 1.0f64;
        let dt = 1e-4;
        let n = (2.0 * mu / dt).round() as usize + 1;
        let s = Signal::scalar_from_fn(dt, 0.0, n, |t| {
            if t <= mu {
                t
            } else {
                2.0 * mu - t
            }
        })
        .unwrap();
        assert_relative_eq!(s.l2_norm_sq(), 2.0 / 3.0 * mu.powi(3), max_relative = 1e-6);
    }

    #[test]
    fn rejects_degenerate_signals() {
        assert!(Signal::new(0.0, 0.0, 1, vec![1.0, 2.0]).is_err());
        assert!(Signal::new(0.1, 0.0, 1, vec![1.0]).is_err());
        assert!(Signal::new(0.1, 0.0, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Signal::new(0.1, 0.0, 1, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn norm_scales_quadratically_and_ignores_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_band_limited(&mut rng, 2, 0.01, 0.0, 400, 0.5).unwrap();
        let base = s.l2_norm_sq();
        let flipped = s.map(|v| -v);
        assert_relative_eq!(flipped.l2_norm_sq(), base, max_relative = 1e-12);
        for c in [0.5, 2.0, 13.25] {
            let scaled = s.map(|v| c * v);
            assert_relative_eq!(scaled.l2_norm_sq(), c * c * base, max_relative = 1e-12);
        }
    }

    #[test]
    fn band_limited_starts_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_band_limited(&mut rng, 1, 0.01, 0.0, 300, 0.5).unwrap();
        assert_eq!(s.sample(0)[0], 0.0);
        assert!(s.l2_norm_sq() > 0.0);
    }
}
