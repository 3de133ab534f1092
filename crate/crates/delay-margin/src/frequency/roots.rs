//! Rightmost characteristic root of the nominal constant-delay system.
//!
//! The quasipolynomial `det(sI - A0 - A1 exp(-h s))` has infinitely
//! many roots but only finitely many to the right of any vertical
//! line. We approximate the spectrum by Chebyshev collocation of the
//! solution operator's generator on `[-h, 0]`, then polish the
//! rightmost candidates with Newton's method on the quasipolynomial
//! itself (via the logarithmic derivative, which needs only one LU
//! factorization per step). Node counts double until the rightmost
//! estimate settles.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::system::LtiDelaySystem;

/// Real parts below `-TOL_STAB` count as stable.
pub const TOL_STAB: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct NominalStability {
    pub stable: bool,
    pub rightmost: Complex64,
    /// Newton refinement succeeded (otherwise the collocation estimate
    /// is reported as-is and `warning` says why).
    pub refined: bool,
    /// Collocation nodes used by the final, settled discretization.
    pub nodes: usize,
    pub warning: Option<String>,
}

/// Chebyshev extreme points and differentiation matrix on [-1, 1].
fn chebyshev(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let c = |i: usize| -> f64 {
        let base = if i == 0 || i == n { 2.0 } else { 1.0 };
        base * if i % 2 == 0 { 1.0 } else { -1.0 }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                let v = (c(i) / c(j)) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    (x, d)
}

/// Collocation matrix whose eigenvalues approximate the characteristic
/// roots: differentiation rows on the interior/history nodes, the delay
/// equation itself on the node at zero.
fn collocation_matrix(sys: &LtiDelaySystem, nodes: usize) -> DMatrix<f64> {
    let n = sys.n();
    let h = sys.h();
    let (_, d) = chebyshev(nodes);
    let dim = (nodes + 1) * n;
    let mut m = DMatrix::zeros(dim, dim);
    // theta_j = h (x_j - 1) / 2 maps x in [-1, 1] to [-h, 0] with
    // theta_0 = 0 and theta_N = -h; d/dtheta = (2/h) d/dx.
    for i in 1..=nodes {
        for j in 0..=nodes {
            let v = 2.0 / h * d[(i, j)];
            for k in 0..n {
                m[(i * n + k, j * n + k)] = v;
            }
        }
    }
    for r in 0..n {
        for c in 0..n {
            m[(r, c)] = sys.a0()[(r, c)];
            m[(r, nodes * n + c)] += sys.a1()[(r, c)];
        }
    }
    m
}

/// `sI - A0 - A1 exp(-h s)`.
pub fn char_matrix(s: Complex64, sys: &LtiDelaySystem) -> DMatrix<Complex64> {
    let n = sys.n();
    let decay = (-sys.h() * s).exp();
    DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(sys.a0()[(i, j)], 0.0) - decay * sys.a1()[(i, j)]
    })
}

/// One Newton step on `log det(char_matrix)`: the increment is
/// `-1 / trace(C^{-1} C')` with `C' = I + h A1 exp(-h s)`.
fn newton_refine(sys: &LtiDelaySystem, start: Complex64) -> Option<Complex64> {
    let n = sys.n();
    let h = sys.h();
    let mut s = start;
    for _ in 0..80 {
        let c = char_matrix(s, sys);
        let lu = c.lu();
        let decay = (-h * s).exp();
        let cp = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            diag + decay * h * sys.a1()[(i, j)]
        });
        let solved = match lu.solve(&cp) {
            Some(x) => x,
            None => return Some(s), // exactly singular: we are on a root
        };
        let trace = solved.trace();
        if trace.norm() < 1e-300 {
            return None;
        }
        let step = -Complex64::new(1.0, 0.0) / trace;
        s += step;
        if !s.re.is_finite() || !s.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-13 * (1.0 + s.norm()) {
            return Some(s);
        }
    }
    None
}

/// Decide asymptotic stability of `dx/dt = A0 x + A1 x(t - h)`.
pub fn nominal_stable(sys: &LtiDelaySystem) -> NominalStability {
    let mut prev: Option<Complex64> = None;
    let mut nodes = 20;
    let mut result: Option<NominalStability> = None;
    while nodes <= 160 {
        let m = collocation_matrix(sys, nodes);
        let eigs = m.complex_eigenvalues();
        let mut candidates: Vec<Complex64> = eigs.iter().copied().filter(|e| e.im >= -1e-12).collect();
        candidates.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        candidates.truncate(8);

        let mut refined: Vec<Complex64> = Vec::new();
        for &cand in &candidates {
            if let Some(root) = newton_refine(sys, cand) {
                // discard runaway refinements that left the neighborhood
                if (root - cand).norm() <= 1.0 + 0.5 * cand.norm() {
                    refined.push(root);
                }
            }
        }
        let (rightmost, is_refined, warning) = match refined
            .iter()
            .copied()
            .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
        {
            Some(r) => (r, true, None),
            None => (
                candidates.first().copied().unwrap_or(Complex64::new(0.0, 0.0)),
                false,
                Some("Newton refinement failed; using the raw collocation estimate".to_string()),
            ),
        };
        let settled = prev.is_some_and(|p| (p - rightmost).norm() < 1e-8);
        result = Some(NominalStability {
            stable: rightmost.re < -TOL_STAB,
            rightmost,
            refined: is_refined,
            nodes,
            warning,
        });
        if settled && is_refined {
            return result.unwrap();
        }
        prev = Some(rightmost);
        nodes *= 2;
    }
    let mut out = result.expect("at least one collocation level ran");
    if out.warning.is_none() {
        out.warning = Some("rightmost estimate did not settle under node doubling".to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn pure_ode_stable() {
        let sys = LtiDelaySystem::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            DMatrix::zeros(2, 2),
            1.0,
        )
        .unwrap();
        let st = nominal_stable(&sys);
        assert!(st.stable);
        assert!(st.refined);
        assert_relative_eq!(st.rightmost.re, -1.0, epsilon = 1e-8);
    }

    #[test]
    fn pure_ode_unstable() {
        let sys = LtiDelaySystem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DMatrix::zeros(2, 2),
            0.5,
        )
        .unwrap();
        let st = nominal_stable(&sys);
        assert!(!st.stable);
        assert_relative_eq!(st.rightmost.re, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn benchmark_system_is_nominally_stable() {
        let st = nominal_stable(&LtiDelaySystem::benchmark_2d());
        assert!(st.stable, "rightmost = {}", st.rightmost);
        assert!(st.rightmost.re < -0.01);
    }

    #[test]
    fn scalar_pure_delay_feedback() {
        // dx/dt = -x(t - 0.1): rightmost root of s = -exp(-0.1 s) is
        // real and negative (approximately -0.9157 per direct fixed
        // point iteration of s = -exp(-0.1 s) refined by Newton here).
        let sys = LtiDelaySystem::new(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            0.1,
        )
        .unwrap();
        let st = nominal_stable(&sys);
        assert!(st.stable);
        assert!(st.rightmost.re < -0.5);
        // residual of the characteristic equation at the reported root
        let c = char_matrix(st.rightmost, &sys);
        assert!(c[(0, 0)].norm() < 1e-9, "residual {}", c[(0, 0)]);
    }

    #[test]
    fn known_marginal_case_detected_as_unstable() {
        // dx/dt = x(t) - x(t - h) has a root at the origin for every h.
        let sys = LtiDelaySystem::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            1.0,
        )
        .unwrap();
        let st = nominal_stable(&sys);
        assert!(!st.stable);
        assert!(st.rightmost.re > -1e-6);
    }
}
