use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("singular design matrix for degree {degree} fit")]
    Singular { degree: usize },

    #[error("undefined variance: {0}")]
    UndefinedVariance(String),

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error("bootstrap unstable: {discarded} of {resamples} resamples were degenerate; more data is needed")]
    Unstable { discarded: usize, resamples: usize },

    #[error("{ansatz} fit did not converge after {iterations} iterations (sse {sse}, gradient norm {gradient_norm})")]
    NotConverged {
        ansatz: String,
        iterations: usize,
        sse: f64,
        gradient_norm: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state error: {0}")]
    State(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
