use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("operation requires a first-order operator, got order {0}")]
    NotFirstOrder(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown catalog operator `{0}`")]
    UnknownOperator(String),
    #[error("grid too small: {cells} cells per axis, need at least {required}")]
    GridTooSmall { cells: usize, required: usize },
    #[error("too few cells: {found} found, {required} required")]
    TooFewCells { found: usize, required: usize },
    #[error("radius {radius} is inadmissible: {reason}")]
    InadmissibleRadius { radius: f64, reason: String },
    #[error("polynomial null space did not stabilize up to degree {d_max} (dims {dims:?})")]
    NotStabilized { d_max: usize, dims: Vec<usize> },
    #[error("inconsistent estimate: {0}")]
    Inconsistent(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
