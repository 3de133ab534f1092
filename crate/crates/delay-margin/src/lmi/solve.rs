//! Small dense eigenvalue-feasibility solver.
//!
//! A problem is a list of affine symmetric blocks `B_j(v)`, each
//! required to satisfy "all eigenvalues of `B_j(v)` at most `t`". The
//! solver minimizes the worst eigenvalue `t*(v) = max_j lmax(B_j(v))`
//! — a convex function of `v` — through log-sum-exp smoothing with a
//! decreasing temperature schedule, an analytic gradient from
//! eigenvector outer products, and L-BFGS descent. Strict feasibility
//! is declared when the exact (unsmoothed) worst eigenvalue drops below
//! `-STRICT_TOL`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par;

/// Feasibility threshold on the exact worst eigenvalue.
pub const STRICT_TOL: f64 = 1e-7;

/// One affine constraint block `constant + sum_k v_k basis[k]`,
/// normalized to the sense "eigenvalues <= t".
#[derive(Debug, Clone)]
pub struct AffineBlock {
    pub name: &'static str,
    pub constant: DMatrix<f64>,
    pub basis: Vec<DMatrix<f64>>,
}

impl AffineBlock {
    pub fn new(name: &'static str, constant: DMatrix<f64>, n_vars: usize) -> Self {
        let size = constant.nrows();
        Self {
            name,
            constant,
            basis: vec![DMatrix::zeros(size, size); n_vars],
        }
    }

    pub fn eval(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (k, b) in self.basis.iter().enumerate() {
            if v[k] != 0.0 {
                m += b * v[k];
            }
        }
        m
    }
}

/// Affine-in-variables symmetric constraint system.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub n_vars: usize,
    pub blocks: Vec<AffineBlock>,
    pub description: String,
}

impl LmiProblem {
    pub fn eval_block(&self, idx: usize, v: &DVector<f64>) -> DMatrix<f64> {
        self.blocks[idx].eval(v)
    }

    /// Exact worst eigenvalue over all blocks.
    pub fn max_eigenvalue(&self, v: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.eval(v).symmetric_eigenvalues().max())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
    /// Optimization did not converge well enough to rule feasibility
    /// out; callers treat this as "not proven feasible".
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Feasible => write!(f, "feasible"),
            Verdict::Infeasible => write!(f, "infeasible"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityCertificate {
    pub verdict: Verdict,
    /// Exact worst eigenvalue at `variables` (negative = strictly inside).
    pub margin: f64,
    pub variables: DVector<f64>,
    pub iterations: usize,
}

impl FeasibilityCertificate {
    pub fn feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// L-BFGS iteration budget per temperature stage.
    pub iters_per_stage: usize,
    /// Random starts tried before declaring infeasibility.
    pub starts: usize,
    pub seed: u64,
    /// Stop early once the exact margin drops below this value.
    pub target: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            iters_per_stage: 250,
            starts: 5,
            seed: 0,
            target: Some(-1e-4),
        }
    }
}

/// Smoothed objective and gradient at `v`.
///
/// `phi_tau(v) = lmax + tau * ln sum exp((lambda_i - lmax)/tau)` over
/// the eigenvalues of every block; the gradient assembles from
/// softmax-weighted eigenvector outer products against each basis
/// matrix. Also returns the exact worst eigenvalue.
fn smoothed_objective(
    problem: &LmiProblem,
    v: &DVector<f64>,
    tau: f64,
) -> (f64, DVector<f64>, f64) {
    struct BlockEig {
        values: DVector<f64>,
        vectors: DMatrix<f64>,
    }
    let eigs: Vec<BlockEig> = problem
        .blocks
        .iter()
        .map(|b| {
            let se = SymmetricEigen::new(b.eval(v));
            BlockEig {
                values: se.eigenvalues,
                vectors: se.eigenvectors,
            }
        })
        .collect();
    let lmax = eigs
        .iter()
        .flat_map(|e| e.values.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for e in &eigs {
        for &l in e.values.iter() {
            z += ((l - lmax) / tau).exp();
        }
    }
    let phi = lmax + tau * z.ln();

    let mut grad = DVector::zeros(problem.n_vars);
    for (bi, e) in eigs.iter().enumerate() {
        // weight matrix G = sum_i w_i q_i q_i^T
        let size = e.values.len();
        let mut g = DMatrix::<f64>::zeros(size, size);
        for i in 0..size {
            let w = ((e.values[i] - lmax) / tau).exp() / z;
            if w < 1e-300 {
                continue;
            }
            let q = e.vectors.column(i);
            for r in 0..size {
                for c in 0..size {
                    g[(r, c)] += w * q[r] * q[c];
                }
            }
        }
        let block = &problem.blocks[bi];
        for k in 0..problem.n_vars {
            let basis = &block.basis[k];
            if basis.iter().all(|&x| x == 0.0) {
                continue;
            }
            let mut dot = 0.0;
            for r in 0..size {
                for c in 0..size {
                    dot += g[(r, c)] * basis[(r, c)];
                }
            }
            grad[k] += dot;
        }
    }
    (phi, grad, lmax)
}

fn objective_only(problem: &LmiProblem, v: &DVector<f64>, tau: f64) -> (f64, f64) {
    let mut lmax = f64::NEG_INFINITY;
    let mut lambdas: Vec<f64> = Vec::new();
    for b in &problem.blocks {
        let vals = b.eval(v).symmetric_eigenvalues();
        for &l in vals.iter() {
            lmax = lmax.max(l);
            lambdas.push(l);
        }
    }
    let z: f64 = lambdas.iter().map(|&l| ((l - lmax) / tau).exp()).sum();
    (lmax + tau * z.ln(), lmax)
}

struct RunResult {
    best_margin: f64,
    best_v: DVector<f64>,
    iterations: usize,
    converged: bool,
}

/// L-BFGS with Armijo backtracking over a temperature continuation.
fn run_start(problem: &LmiProblem, v0: DVector<f64>, opts: &SolveOptions) -> RunResult {
    const TAUS: [f64; 6] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4];
    const MEMORY: usize = 8;
    let mut v = v0;
    let mut best_margin = problem.max_eigenvalue(&v);
    let mut best_v = v.clone();
    let mut iterations = 0usize;
    let mut converged = true;

    for &tau in &TAUS {
        let (mut phi, mut grad, mut exact) = smoothed_objective(problem, &v, tau);
        if exact < best_margin {
            best_margin = exact;
            best_v = v.clone();
        }
        let mut s_hist: Vec<DVector<f64>> = Vec::new();
        let mut y_hist: Vec<DVector<f64>> = Vec::new();
        let mut stage_converged = false;
        for _ in 0..opts.iters_per_stage {
            iterations += 1;
            let gnorm = grad.amax();
            if gnorm < 1e-8 * (1.0 + phi.abs()) {
                stage_converged = true;
                break;
            }
            // two-loop recursion
            let mut q = grad.clone();
            let mut alphas = Vec::with_capacity(s_hist.len());
            for i in (0..s_hist.len()).rev() {
                let rho = 1.0 / y_hist[i].dot(&s_hist[i]);
                let a = rho * s_hist[i].dot(&q);
                q -= &y_hist[i] * a;
                alphas.push((i, a, rho));
            }
            if let Some((_, _, _)) = alphas.last() {
                let i = s_hist.len() - 1;
                let gamma = s_hist[i].dot(&y_hist[i]) / y_hist[i].dot(&y_hist[i]);
                q *= gamma;
            }
            for (i, a, rho) in alphas.into_iter().rev() {
                let b = rho * y_hist[i].dot(&q);
                q += &s_hist[i] * (a - b);
            }
            let dir = -q;
            let dir_dot_grad = dir.dot(&grad);
            let dir = if dir_dot_grad >= 0.0 {
                // safeguard: fall back to steepest descent
                s_hist.clear();
                y_hist.clear();
                -grad.clone()
            } else {
                dir
            };
            let dir_dot_grad = dir.dot(&grad);

            // Armijo backtracking
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &v + &dir * alpha;
                let (phi_c, exact_c) = objective_only(problem, &cand, tau);
                if phi_c.is_finite() && phi_c <= phi + 1e-4 * alpha * dir_dot_grad {
                    let (phi_n, grad_n, exact_n) = smoothed_objective(problem, &cand, tau);
                    let s = &cand - &v;
                    let yv = &grad_n - &grad;
                    if s.dot(&yv) > 1e-12 * s.norm() * yv.norm() {
                        s_hist.push(s);
                        y_hist.push(yv);
                        if s_hist.len() > MEMORY {
                            s_hist.remove(0);
                            y_hist.remove(0);
                        }
                    }
                    v = cand;
                    phi = phi_n;
                    grad = grad_n;
                    exact = exact_n.min(exact_c);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if exact < best_margin {
                best_margin = exact;
                best_v = v.clone();
            }
            if let Some(tg) = opts.target {
                if best_margin < tg {
                    return RunResult {
                        best_margin,
                        best_v,
                        iterations,
                        converged: true,
                    };
                }
            }
            if !accepted {
                stage_converged = true; // line search exhausted: at a stationary point
                break;
            }
        }
        if !stage_converged {
            converged = false;
        }
    }
    RunResult {
        best_margin,
        best_v,
        iterations,
        converged,
    }
}

/// Decide strict feasibility of the block system.
///
/// The first start is the warm point when given (zeros otherwise); if
/// it does not already prove feasibility, the remaining random starts
/// run (in parallel under the `parallel` feature) before the verdict
/// falls. The objective is convex, so the multi-start is insurance
/// against slow line-search progress, not against local minima.
pub fn feasibility_solve(
    problem: &LmiProblem,
    opts: &SolveOptions,
    warm: Option<&DVector<f64>>,
) -> FeasibilityCertificate {
    let first = warm.cloned().unwrap_or_else(|| DVector::zeros(problem.n_vars));
    let r0 = run_start(problem, first, opts);
    let mut total_iters = r0.iterations;
    let mut best = r0;
    if best.best_margin >= -STRICT_TOL {
        let extra: Vec<DVector<f64>> = (0..opts.starts.saturating_sub(1))
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(1000 + i as u64);
                DVector::from_fn(problem.n_vars, |_, _| rng.random_range(-0.5..0.5))
            })
            .collect();
        let results = par::map_slice(&extra, |v0| run_start(problem, v0.clone(), opts));
        for r in results {
            total_iters += r.iterations;
            let improved = r.best_margin < best.best_margin;
            if improved {
                best.best_margin = r.best_margin;
                best.best_v = r.best_v;
            }
            best.converged &= r.converged;
        }
    }
    let verdict = if best.best_margin < -STRICT_TOL {
        Verdict::Feasible
    } else if best.converged {
        Verdict::Infeasible
    } else {
        Verdict::Inconclusive
    };
    FeasibilityCertificate {
        verdict,
        margin: best.best_margin,
        variables: best.best_v,
        iterations: total_iters,
    }
}
