use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node index {index} out of range for a graph on {p} nodes")]
    NodeOutOfRange { index: usize, p: usize },

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite{}", context_suffix(.0))]
    NotPositiveDefinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is not decomposable")]
    NotDecomposable,

    #[error("matrix entry ({i}, {j}) must be zero for the given graph")]
    PatternViolation { i: usize, j: usize },

    #[error("neighbourhood of node {node} has {size} members but only {n} observations")]
    SingularLocalModel { node: usize, size: usize, n: usize },

    #[error("edge ({i}, {j}) is already present")]
    EdgePresent { i: usize, j: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

fn context_suffix(ctx: &str) -> String {
    if ctx.is_empty() {
        String::new()
    } else {
        format!(" ({ctx})")
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
