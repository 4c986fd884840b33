use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("row {row} references undeclared column {column}")]
    UnknownColumn { row: String, column: usize },
    #[error("non-finite coefficient in {location}")]
    NonFinite { location: String },
    #[error("inconsistent bounds on column {column}")]
    BadBounds { column: usize },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("numerically singular basis (smallest pivot {pivot:.3e} at basis position {position})")]
    SingularBasis { position: usize, pivot: f64 },
    #[error("simplex iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("time limit reached")]
    TimeLimit,
}

#[derive(Debug, Error)]
pub enum LpFileError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot write LP file: {0}")]
    Unrepresentable(String),
}
