use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error in {what}: {detail}")]
    Syntax { what: &'static str, detail: String },

    #[error("value is rational: {0}")]
    RationalValue(String),

    #[error("{0} is not square-free")]
    NotSquareFree(u64),

    #[error("requested error {requested:e} unattainable within {max_bits} bits of working precision")]
    PrecisionExhausted { requested: f64, max_bits: u64 },

    #[error("Liouville depth {depth} too shallow: {detail}")]
    InsufficientDepth { depth: usize, detail: String },

    #[error("depth {requested} exceeds the cap of {cap}")]
    DepthCap { requested: usize, cap: usize },

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("parameter violation: {0}")]
    Violation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error:e}")]
    NoConvergence { estimate: f64, error: f64 },

    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn syntax(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Syntax {
        what,
        detail: detail.into(),
    }
}
