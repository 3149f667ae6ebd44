use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter `{name}` out of range: {detail}")]
    OutOfRange { name: &'static str, detail: String },

    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,

    #[error("infeasible delta {requested}: the largest feasible value is {max}")]
    InfeasibleDelta { requested: f64, max: f64 },

    #[error("bound is vacuous: {0}")]
    VacuousBound(String),

    #[error("exhaustive budget exceeded: {required} > {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("arithmetic overflow in exact mode")]
    ExactOverflow,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("json: {0}")]
    Json(String),
}

impl Error {
    pub(crate) fn range(name: &'static str, detail: impl Into<String>) -> Self {
        Error::OutOfRange { name, detail: detail.into() }
    }
}
