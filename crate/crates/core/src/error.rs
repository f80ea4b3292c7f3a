use thiserror::Error;

/// Errors produced by the rate engine, the solvers and the learning stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RsmaError {
    /// An argument lies outside the domain of the rate formulas.
    #[error("domain error: {0}")]
    Domain(String),

    /// No allocation satisfies the problem constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The binding-rate equation is not quadratic in the common power
    /// (perfect SIC or a zero rate threshold).
    #[error("degenerate regime: {0}")]
    DegenerateRegime(&'static str),

    /// The binding user cannot reach the minimum rate even with zero common power.
    #[error("the binding equation has no non-negative root")]
    NoPositiveRoot,

    /// Inverting the binding equation gave a squared circularity coefficient outside [0, 1].
    #[error("kappa^2 = {0} is outside [0, 1]")]
    KappaOutOfRange(f64),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, RsmaError>;

pub(crate) fn domain(msg: impl Into<String>) -> RsmaError {
    RsmaError::Domain(msg.into())
}
