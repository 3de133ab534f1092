//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent caller input (horizons, grids, flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// System document does not match the expected JSON schema.
    #[error("system document schema: {0}")]
    Schema(String),

    /// The uncertainty radius violates `mu <= h`.
    #[error("mu exceeds h (mu = {mu}, h = {h})")]
    MuExceedsH { mu: f64, h: f64 },

    /// Derivative parameter inconsistent with the delay case.
    #[error("p out of range for case {case}: {detail}")]
    POutOfRange { case: char, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A characteristic root sits on the imaginary axis; the gain is
    /// unbounded there and the nominal-stability assumption fails.
    #[error("characteristic matrix singular on the imaginary axis near omega = {omega}")]
    AxisSingularity { omega: f64 },

    #[error("integration diverged at t = {t} (|x| > {bound:.1e})")]
    Divergence { t: f64, bound: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
