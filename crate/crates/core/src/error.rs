use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected: {0}")]
    Disconnected(String),

    #[error("non-positive {what} at {location}: {value}")]
    NonPositive {
        what: &'static str,
        location: String,
        value: String,
    },

    #[error("duplicate edge {0}--{1}")]
    DuplicateEdge(usize, usize),

    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),

    #[error("function is nonzero on boundary vertex {0}")]
    BoundaryViolation(usize),

    #[error("support leaves ball({center}, {radius}) at vertex {vertex}")]
    Support {
        center: usize,
        radius: usize,
        vertex: usize,
    },

    #[error("zero function")]
    ZeroFunction,

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("voltage error: {0}")]
    Voltage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("factorization broke down at shift {0:e}")]
    Breakdown(f64),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no escaping family on a finite cover")]
    FiniteCover,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
