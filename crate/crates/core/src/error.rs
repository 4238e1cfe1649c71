use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector or table shape does not match the search space.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Enumeration refused; `count` is the number of effective architectures.
    #[error("architecture count {count} exceeds cap {cap}")]
    CapExceeded { count: u128, cap: u128 },

    /// No point satisfies the latency budget; `min_cost` is the cheapest achievable.
    #[error("infeasible latency budget {budget}: minimal achievable cost is {min_cost}")]
    Infeasible { budget: f64, min_cost: f64 },

    #[error("no feasible architecture found after {attempts} draws")]
    FeasibilitySampling { attempts: usize },

    /// A continuous solution lacks the one-fractional-group structure.
    #[error("sparsity precondition violated: {0}")]
    Sparsity(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
