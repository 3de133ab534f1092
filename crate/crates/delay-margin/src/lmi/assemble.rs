//! Assembly of the stability LMI blocks.
//!
//! The main inequality lives on a `6n x 6n` symmetric matrix built from
//! a `4n x 4n` descriptor core `Gamma_n` plus two appended block
//! columns that carry the uncertainty coupling (`mu P2' A1 / mu P3' A1`
//! against a `-mu Ra` diagonal, and `F Ra` against `-F Ra`). At
//! `mu = 0` both appended pairs Schur-eliminate to nothing and the
//! problem reduces to the nominal `4n x 4n` core.
//!
//! The row placement of the `F Ra` coupling is ambiguous in the source
//! material's typesetting; [`ColumnAlignment`] selects between the two
//! dimensionally consistent readings and the margin-table reproduction
//! decides which one is right (the derivative-row alignment is the
//! primary choice).

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::lmi::solve::{AffineBlock, LmiProblem};
use crate::lmi::LmiVariables;
use crate::system::LtiDelaySystem;

/// Row block that receives the `F Ra` coupling column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnAlignment {
    /// Rows `n..2n` (the derivative rows of the descriptor pair) —
    /// primary reading.
    XdotRow,
    /// Rows `2n..3n` (the delayed-state rows) — documented fallback.
    DelayedStateRow,
}

impl std::fmt::Display for ColumnAlignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnAlignment::XdotRow => write!(f, "xdot-row"),
            ColumnAlignment::DelayedStateRow => write!(f, "delayed-state-row"),
        }
    }
}

/// Assembled constraint matrices for one decision point.
#[derive(Debug, Clone)]
pub struct Assembled {
    /// The main inequality matrix (`6n x 6n`, or `4n x 4n` when `mu = 0`);
    /// required negative definite.
    pub main: DMatrix<f64>,
    /// Required positive definite.
    pub p1: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub ra: DMatrix<f64>,
    /// Largest symmetry residual observed during assembly (diagnostic).
    pub asymmetry: f64,
}

fn set_block(m: &mut DMatrix<f64>, row: usize, col: usize, b: &DMatrix<f64>) {
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            m[(row + i, col + j)] = b[(i, j)];
        }
    }
}

/// Mirror the upper block triangle into the lower one and symmetrize.
fn finish_symmetric(mut m: DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    let mut resid = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            resid = resid.max((m[(i, j)] - sym[(i, j)]).abs());
        }
    }
    (sym, resid)
}

/// Build every constraint matrix of the stability LMI at the given
/// decision point. All blocks are affine in the decision variables with
/// zero constant term.
pub fn assemble_lmi(
    sys: &LtiDelaySystem,
    mu: f64,
    f: f64,
    vars: &LmiVariables,
    alignment: ColumnAlignment,
) -> Result<Assembled> {
    let n = sys.n();
    if vars.n != n {
        return Err(crate::error::Error::Dimension(format!(
            "variables sized for n = {}, system has n = {n}",
            vars.n
        )));
    }
    let h = sys.h();
    let a0 = sys.a0();
    let a1 = sys.a1();

    // P = [P1 0; P2 P3] and the descriptor pencil pair
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    set_block(&mut p, 0, 0, &vars.p1);
    set_block(&mut p, n, 0, &vars.p2);
    set_block(&mut p, n, n, &vars.p3);
    let mut a_aug = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a_aug[(i, n + i)] = 1.0;
    }
    set_block(&mut a_aug, n, 0, a0);
    for i in 0..n {
        a_aug[(n + i, n + i)] = -1.0;
    }

    // Psi = P' A_aug + A_aug' P + diag(S, h R) + [Y; 0] + [Y; 0]'
    let pt_a = p.transpose() * &a_aug;
    let mut psi = &pt_a + pt_a.transpose();
    for i in 0..n {
        for j in 0..n {
            psi[(i, j)] += vars.s[(i, j)];
            psi[(n + i, n + j)] += h * vars.r[(i, j)];
        }
    }
    let mut y = DMatrix::zeros(n, 2 * n);
    set_block(&mut y, 0, 0, &vars.y1);
    set_block(&mut y, 0, n, &vars.y2);
    for i in 0..n {
        for j in 0..2 * n {
            psi[(i, j)] += y[(i, j)];
            psi[(j, i)] += y[(i, j)];
        }
    }

    // Gamma core (4n x 4n), upper triangle
    let dim = if mu == 0.0 { 4 * n } else { 6 * n };
    let mut m = DMatrix::zeros(dim, dim);
    set_block(&mut m, 0, 0, &psi);
    // column against the delayed state: P' [0; A1] - Y' + [T; 0]
    let pt = p.transpose();
    let mut col_delay = DMatrix::zeros(2 * n, n);
    for i in 0..2 * n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += pt[(i, n + k)] * a1[(k, j)];
            }
            col_delay[(i, j)] = acc - y[(j, i)];
        }
    }
    for i in 0..n {
        for j in 0..n {
            col_delay[(i, j)] += vars.t[(i, j)];
        }
    }
    set_block(&mut m, 0, 2 * n, &col_delay);
    let hyt = y.transpose() * h;
    set_block(&mut m, 0, 3 * n, &hyt);
    let s_t = &vars.s + &vars.t + vars.t.transpose();
    set_block(&mut m, 2 * n, 2 * n, &(-&s_t));
    set_block(&mut m, 2 * n, 3 * n, &(&vars.t * (-h)));
    set_block(&mut m, 3 * n, 3 * n, &(&vars.r * (-h)));

    if mu > 0.0 {
        // uncertainty-input column: mu [P2' A1; P3' A1] on the descriptor rows
        let p2t_a1 = vars.p2.transpose() * a1 * mu;
        let p3t_a1 = vars.p3.transpose() * a1 * mu;
        set_block(&mut m, 0, 4 * n, &p2t_a1);
        set_block(&mut m, n, 4 * n, &p3t_a1);
        // gain-bound column: F Ra on the row block chosen by `alignment`
        let f_ra = &vars.ra * f;
        match alignment {
            ColumnAlignment::XdotRow => set_block(&mut m, n, 5 * n, &f_ra),
            ColumnAlignment::DelayedStateRow => set_block(&mut m, 2 * n, 5 * n, &f_ra),
        }
        set_block(&mut m, 4 * n, 4 * n, &(&vars.ra * (-mu)));
        set_block(&mut m, 5 * n, 5 * n, &(&vars.ra * (-f)));
    }

    let (main, asymmetry) = finish_symmetric(m);
    Ok(Assembled {
        main,
        p1: vars.p1.clone(),
        s: vars.s.clone(),
        ra: vars.ra.clone(),
        asymmetry,
    })
}

/// Strict-feasibility floor for the positive-definite side constraints.
pub const EPS0: f64 = 1e-6;

/// Express the assembled LMI as affine eigenvalue blocks for the
/// feasibility solver. Every block is normalized to the sense
/// "all eigenvalues <= t":
///
/// * `lmi`: the main matrix itself;
/// * `p1_pd`, `s_pd`, `ra_pd`: `EPS0 I - X` for each matrix required
///   positive definite;
/// * `p1_cap`: `P1 - I`. The theorem's constraints are homogeneous of
///   degree one in the variables, so the feasible set is a cone; the
///   cap pins a bounded cross-section without changing feasibility.
pub fn build_problem(
    sys: &LtiDelaySystem,
    mu: f64,
    f: f64,
    alignment: ColumnAlignment,
) -> Result<LmiProblem> {
    let n = sys.n();
    let n_vars = LmiVariables::dim(n);
    let zero_vars = LmiVariables::zeros(n);
    let at_zero = assemble_lmi(sys, mu, f, &zero_vars, alignment)?;
    let main_dim = at_zero.main.nrows();
    let eye_n = DMatrix::<f64>::identity(n, n);

    let mut blocks = vec![
        AffineBlock::new("lmi", at_zero.main.clone(), n_vars),
        AffineBlock::new("p1_pd", &eye_n * EPS0, n_vars),
        AffineBlock::new("s_pd", &eye_n * EPS0, n_vars),
        AffineBlock::new("ra_pd", &eye_n * EPS0, n_vars),
        AffineBlock::new("p1_cap", -&eye_n, n_vars),
    ];
    for k in 0..n_vars {
        let mut unit = DVector::zeros(n_vars);
        unit[k] = 1.0;
        let vars = LmiVariables::unpack(n, &unit)?;
        let at_unit = assemble_lmi(sys, mu, f, &vars, alignment)?;
        blocks[0].basis[k] = &at_unit.main - &at_zero.main;
        blocks[1].basis[k] = -&vars.p1;
        blocks[2].basis[k] = -&vars.s;
        blocks[3].basis[k] = -&vars.ra;
        blocks[4].basis[k] = vars.p1.clone();
    }
    Ok(LmiProblem {
        n_vars,
        blocks,
        description: format!(
            "stability LMI: n = {n}, h = {}, mu = {mu}, F = {f}, alignment = {alignment}, main {main_dim}x{main_dim}",
            sys.h()
        ),
    })
}
