use thiserror::Error;

use crate::expr::ExprError;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gradient requested at the origin")]
    OriginGradient,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("angular profile is not positive at theta = {theta}")]
    NonPositiveProfile { theta: f64 },
    #[error("angle out of range: {0}")]
    OutOfRange(String),
    #[error("Hamiltonian ordering V1 <= V2 violated at theta = {theta} (v1 - v2 = {excess})")]
    OrderingViolated { theta: f64, excess: f64 },
    #[error("no admissible point on curve C({a},{b}) in the requested range")]
    EmptyCurve { a: u32, b: u32 },
    #[error(transparent)]
    Expression(#[from] ExprError),
    #[error("trajectory approached the origin at t = {t} (|z| = {rho})")]
    NearOrigin { t: f64, rho: f64 },
    #[error("integration step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("every trajectory of the sweep failed")]
    AllTrajectoriesFailed,
    #[error("verification failed: boundary residual {residual} exceeds {limit}")]
    VerificationFailed { residual: f64, limit: f64 },
    #[error("malformed trajectory CSV at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("missing functional value for {0}")]
    MissingFunctional(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
