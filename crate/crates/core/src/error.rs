use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// An iterative procedure ran out of budget before meeting its tolerance.
    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    /// A truncation cannot be certified at the requested accuracy.
    #[error("tolerance not met in {what}: bound {bound:e} exceeds requested {requested:e}")]
    Tolerance {
        what: &'static str,
        bound: f64,
        requested: f64,
    },

    /// A problem size exceeds the configured budget.
    #[error("capacity exceeded: {what} needs {needed}, budget is {budget}")]
    Capacity {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    /// Inputs are individually valid but mutually inconsistent.
    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    /// A parameter violates a model invariant.
    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The time stepper drifted away from a conserved quantity.
    #[error("time stepping unstable: {0}")]
    Instability(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::Invalid(detail.into())
    }
}
