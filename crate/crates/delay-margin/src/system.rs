//! Plant and delay-uncertainty descriptions, plus document parsing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear plant `dx/dt = A0 x(t) + A1 x(t - tau(t))` with nominal delay `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiDelaySystem {
    a0: DMatrix<f64>,
    a1: DMatrix<f64>,
    h: f64,
}

impl LtiDelaySystem {
    pub fn new(a0: DMatrix<f64>, a1: DMatrix<f64>, h: f64) -> Result<Self> {
        if a0.nrows() == 0 || a0.nrows() != a0.ncols() {
            return Err(Error::Dimension(format!(
                "A0 must be square and non-empty, got {}x{}",
                a0.nrows(),
                a0.ncols()
            )));
        }
        if a1.nrows() != a0.nrows() || a1.ncols() != a0.ncols() {
            return Err(Error::Dimension(format!(
                "A1 must match A0 ({}x{}), got {}x{}",
                a0.nrows(),
                a0.ncols(),
                a1.nrows(),
                a1.ncols()
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("nominal delay h = {h} must be positive")));
        }
        if a0.iter().chain(a1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("system matrices contain non-finite entries".into()));
        }
        Ok(Self { a0, a1, h })
    }

    pub fn n(&self) -> usize {
        self.a0.nrows()
    }

    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a0
    }

    pub fn a1(&self) -> &DMatrix<f64> {
        &self.a1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The two-state benchmark plant used throughout the test suite:
    /// `A0 = [[0, 1], [-1, -2]]`, `A1 = [[0, 0], [-1, 1]]`, `h = 1`.
    pub fn benchmark_2d() -> Self {
        let a0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -2.0]);
        let a1 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -1.0, 1.0]);
        Self::new(a0, a1, 1.0).expect("benchmark system is valid")
    }
}

/// Delay classes, named by the customary A/B/C taxonomy.
///
/// A: slowly varying (`d = 1 + p < 1`), C: moderately varying
/// (`d >= 1`), B: fast varying (no derivative constraint).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DelayCase {
    A,
    B,
    C,
}

impl std::fmt::Display for DelayCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DelayCase::A => write!(f, "A"),
            DelayCase::B => write!(f, "B"),
            DelayCase::C => write!(f, "C"),
        }
    }
}

/// Delay-derivative parameter `p` with `+inf` as an explicit state so no
/// arithmetic silently runs on an infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivParam {
    Finite(f64),
    Infinite,
}

impl DerivParam {
    /// Derivative bound `d = 1 + p` for finite `p`.
    pub fn d(&self) -> Option<f64> {
        match self {
            DerivParam::Finite(p) => Some(1.0 + p),
            DerivParam::Infinite => None,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            DerivParam::Finite(p) => Some(*p),
            DerivParam::Infinite => None,
        }
    }
}

impl std::fmt::Display for DerivParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DerivParam::Finite(p) => write!(f, "{p}"),
            DerivParam::Infinite => write!(f, "inf"),
        }
    }
}

/// Bounded delay uncertainty: `tau(t) = h + eta(t)`, `|eta| <= mu`, with
/// the derivative constraint encoded by the case/p pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayUncertainty {
    mu: f64,
    case: DelayCase,
    p: DerivParam,
}

impl DelayUncertainty {
    /// Validate the case/p consistency rules: case A needs
    /// `p in [-1, 0)`, case C needs finite `p >= 0`, case B carries no
    /// finite `p` at all.
    pub fn new(mu: f64, case: DelayCase, p: Option<f64>) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "uncertainty radius mu = {mu} must be non-negative"
            )));
        }
        let p = match (case, p) {
            (DelayCase::A, Some(p)) if (-1.0..0.0).contains(&p) => DerivParam::Finite(p),
            (DelayCase::A, Some(p)) => {
                return Err(Error::POutOfRange {
                    case: 'A',
                    detail: format!("expected -1 <= p < 0, got {p}"),
                })
            }
            (DelayCase::A, None) => {
                return Err(Error::POutOfRange {
                    case: 'A',
                    detail: "p is required".into(),
                })
            }
            (DelayCase::C, Some(p)) if p >= 0.0 && p.is_finite() => DerivParam::Finite(p),
            (DelayCase::C, Some(p)) => {
                return Err(Error::POutOfRange {
                    case: 'C',
                    detail: format!("expected finite p >= 0, got {p}"),
                })
            }
            (DelayCase::C, None) => {
                return Err(Error::POutOfRange {
                    case: 'C',
                    detail: "p is required".into(),
                })
            }
            (DelayCase::B, None) => DerivParam::Infinite,
            (DelayCase::B, Some(p)) => {
                return Err(Error::POutOfRange {
                    case: 'B',
                    detail: format!("p must be omitted for case B, got {p}"),
                })
            }
        };
        Ok(Self { mu, case, p })
    }

    pub fn case_b(mu: f64) -> Result<Self> {
        Self::new(mu, DelayCase::B, None)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn case(&self) -> DelayCase {
        self.case
    }

    pub fn p(&self) -> DerivParam {
        self.p
    }

    /// Enforce the `mu <= h` coupling against a concrete plant.
    pub fn check_against(&self, sys: &LtiDelaySystem) -> Result<()> {
        if self.mu > sys.h() {
            return Err(Error::MuExceedsH {
                mu: self.mu,
                h: sys.h(),
            });
        }
        Ok(())
    }

    /// Same uncertainty with a different radius.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(mu, self.case, self.p.finite())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemDoc {
    #[serde(rename = "A0")]
    a0: Vec<Vec<f64>>,
    #[serde(rename = "A1")]
    a1: Vec<Vec<f64>>,
    h: f64,
    mu: f64,
    case: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<serde_json::Value>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    if nr == 0 {
        return Err(Error::Schema(format!("{name} is empty")));
    }
    let nc = rows[0].len();
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Schema(format!("{name} rows have inconsistent lengths")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Parse a JSON system document into a validated plant/uncertainty pair.
///
/// Expected shape:
/// `{ "A0": [[...]], "A1": [[...]], "h": r, "mu": r, "case": "A"|"B"|"C", "p": r|"inf" }`
/// where `p` is required for cases A and C and forbidden for case B.
pub fn parse_system(document: &str) -> Result<(LtiDelaySystem, DelayUncertainty)> {
    let doc: SystemDoc =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    let a0 = matrix_from_rows("A0", &doc.a0)?;
    let a1 = matrix_from_rows("A1", &doc.a1)?;
    let sys = LtiDelaySystem::new(a0, a1, doc.h)?;
    let case = match doc.case.as_str() {
        "A" => DelayCase::A,
        "B" => DelayCase::B,
        "C" => DelayCase::C,
        other => return Err(Error::Schema(format!("unknown case {other:?}"))),
    };
    let p = match doc.p {
        None => None,
        Some(serde_json::Value::Number(x)) => {
            Some(x.as_f64().ok_or_else(|| Error::Schema("p is not representable as f64".into()))?)
        }
        Some(serde_json::Value::String(s)) if s == "inf" => {
            if case == DelayCase::B {
                None // explicit "inf" is tolerated as a synonym for omission
            } else {
                return Err(Error::POutOfRange {
                    case: match case {
                        DelayCase::A => 'A',
                        DelayCase::C => 'C',
                        DelayCase::B => 'B',
                    },
                    detail: "p = \"inf\" is only meaningful for case B".into(),
                });
            }
        }
        Some(v) => return Err(Error::Schema(format!("p must be a number or \"inf\", got {v}"))),
    };
    let unc = DelayUncertainty::new(doc.mu, case, p)?;
    unc.check_against(&sys)?;
    Ok((sys, unc))
}

/// Serialize back to the document format accepted by [`parse_system`].
/// Matrix entries round-trip bit-exactly.
pub fn serialize_system(sys: &LtiDelaySystem, unc: &DelayUncertainty) -> String {
    let to_rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    };
    let doc = SystemDoc {
        a0: to_rows(sys.a0()),
        a1: to_rows(sys.a1()),
        h: sys.h(),
        mu: unc.mu(),
        case: unc.case().to_string(),
        p: unc.p().finite().map(|p| serde_json::json!(p)),
    };
    serde_json::to_string_pretty(&doc).expect("document serialization cannot fail")
}
