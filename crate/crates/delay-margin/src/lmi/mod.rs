//! Time-domain stability certificates via LMI feasibility.
//!
//! The criterion couples a descriptor-form Lyapunov certificate for the
//! nominal delay with the gain bound `mu^2 F(p)` on the uncertainty
//! operator. Feasibility of one structured matrix inequality in the
//! decision matrices `P1, P2, P3, S, Y1, Y2, T, R, Ra` certifies
//! asymptotic stability for every admissible `eta`; bisection over `mu`
//! turns the certificate into a margin.

pub mod assemble;
pub mod bisect;
pub mod solve;

pub use assemble::{assemble_lmi, build_problem, Assembled, ColumnAlignment};
pub use bisect::{mu_max_bisect, BisectOutcome, BisectStep};
pub use solve::{feasibility_solve, FeasibilityCertificate, LmiProblem, SolveOptions, Verdict};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Decision matrices of the stability LMI.
///
/// `P1`, `S`, `R`, `Ra` are symmetric (only upper-triangle entries are
/// decision variables); the rest are full square matrices. The packed
/// ordering is fixed and documented on [`LmiVariables::pack`].
#[derive(Debug, Clone, PartialEq)]
pub struct LmiVariables {
    pub n: usize,
    pub p1: DMatrix<f64>,
    pub p2: DMatrix<f64>,
    pub p3: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub y1: DMatrix<f64>,
    pub y2: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub ra: DMatrix<f64>,
}

fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

impl LmiVariables {
    /// Packed decision-vector length: `4 n(n+1)/2 + 5 n^2`
    /// (32 scalars at `n = 2`).
    pub fn dim(n: usize) -> usize {
        4 * sym_len(n) + 5 * n * n
    }

    pub fn zeros(n: usize) -> Self {
        let z = || DMatrix::zeros(n, n);
        Self {
            n,
            p1: z(),
            p2: z(),
            p3: z(),
            s: z(),
            y1: z(),
            y2: z(),
            t: z(),
            r: z(),
            ra: z(),
        }
    }

    /// Flatten into the canonical ordering:
    /// `P1 (upper triangle), P2, P3, S (ut), Y1, Y2, T, R (ut), Ra (ut)`,
    /// full matrices column-major, triangles column-major over `i <= j`.
    pub fn pack(&self) -> DVector<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(Self::dim(n));
        let push_sym = |out: &mut Vec<f64>, m: &DMatrix<f64>| {
            for j in 0..n {
                for i in 0..=j {
                    out.push(m[(i, j)]);
                }
            }
        };
        let push_full = |out: &mut Vec<f64>, m: &DMatrix<f64>| {
            for j in 0..n {
                for i in 0..n {
                    out.push(m[(i, j)]);
                }
            }
        };
        push_sym(&mut out, &self.p1);
        push_full(&mut out, &self.p2);
        push_full(&mut out, &self.p3);
        push_sym(&mut out, &self.s);
        push_full(&mut out, &self.y1);
        push_full(&mut out, &self.y2);
        push_full(&mut out, &self.t);
        push_sym(&mut out, &self.r);
        push_sym(&mut out, &self.ra);
        DVector::from_vec(out)
    }

    /// Inverse of [`LmiVariables::pack`]; symmetric blocks are mirrored
    /// from their upper triangles.
    pub fn unpack(n: usize, v: &DVector<f64>) -> Result<Self> {
        if v.len() != Self::dim(n) {
            return Err(Error::Dimension(format!(
                "decision vector has length {}, expected {}",
                v.len(),
                Self::dim(n)
            )));
        }
        let mut idx = 0usize;
        let mut take_sym = || {
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..=j {
                    m[(i, j)] = v[idx];
                    m[(j, i)] = v[idx];
                    idx += 1;
                }
            }
            m
        };
        let p1 = take_sym();
        let mut idx2 = idx;
        let mut take_full = || {
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] = v[idx2];
                    idx2 += 1;
                }
            }
            m
        };
        let p2 = take_full();
        let p3 = take_full();
        let mut idx3 = idx2;
        let mut take_sym2 = || {
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..=j {
                    m[(i, j)] = v[idx3];
                    m[(j, i)] = v[idx3];
                    idx3 += 1;
                }
            }
            m
        };
        let s = take_sym2();
        let mut idx4 = idx3;
        let mut take_full2 = || {
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] = v[idx4];
                    idx4 += 1;
                }
            }
            m
        };
        let y1 = take_full2();
        let y2 = take_full2();
        let t = take_full2();
        let mut idx5 = idx4;
        let mut take_sym3 = || {
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..=j {
                    m[(i, j)] = v[idx5];
                    m[(j, i)] = v[idx5];
                    idx5 += 1;
                }
            }
            m
        };
        let r = take_sym3();
        let ra = take_sym3();
        debug_assert_eq!(idx5, Self::dim(n));
        Ok(Self {
            n,
            p1,
            p2,
            p3,
            s,
            y1,
            y2,
            t,
            r,
            ra,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn packed_dimension_is_32_for_n2() {
        assert_eq!(LmiVariables::dim(2), 32);
        assert_eq!(LmiVariables::dim(1), 9);
        assert_eq!(LmiVariables::dim(3), 69);
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3usize {
            let v = DVector::from_fn(LmiVariables::dim(n), |_, _| rng.random_range(-1.0..1.0));
            let vars = LmiVariables::unpack(n, &v).unwrap();
            assert_eq!(vars.pack(), v);
            // symmetric blocks really are symmetric
            assert_eq!(vars.p1, vars.p1.transpose());
            assert_eq!(vars.s, vars.s.transpose());
            assert_eq!(vars.r, vars.r.transpose());
            assert_eq!(vars.ra, vars.ra.transpose());
        }
    }
}
