use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
    #[error("finite-difference probe leaves the punctured disk (step {step})")]
    StepTooLarge { step: f64 },
    #[error("angles {0} and {1} coincide modulo 2pi")]
    CollidingAngles(usize, usize),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("polynomial is not monic (leading coefficient {0})")]
    NonMonic(String),
    #[error("root finding failed: {0}")]
    RootFindingFailure(String),
    #[error("Lambda = {big_lambda} does not match lambda = {lambda}")]
    InconsistentPair { big_lambda: f64, lambda: f64 },
    #[error("integration blew up at r = {0}")]
    BlowupInIntegration(f64),
    #[error("Newton diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("singular Jacobian: pivot {pivot:e} at row {row}")]
    SingularJacobian { pivot: f64, row: usize },
    #[error("branch lost at lambda = {0}")]
    BranchLost(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
