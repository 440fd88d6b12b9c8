use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("column index {col} out of range for {cols} columns")]
    ColumnOutOfRange { col: usize, cols: usize },

    #[error("duplicate column index {col} in row {row}")]
    DuplicateColumn { row: usize, col: usize },

    #[error("prior probability {0} outside [0, 1/2)")]
    InvalidPrior(f64),

    #[error("line {line}: {message}")]
    Dem { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("enumeration budget exceeded: kernel dimension {dim} > {budget}")]
    BudgetExceeded { dim: usize, budget: usize },

    #[error("syndrome is not in the column space of the check matrix")]
    InfeasibleSyndrome,

    #[error("coset contains fewer than two logical classes")]
    SingleClass,

    #[error("outcome is an erasure")]
    Erasure,

    #[error("validity audit failed on shot {shot}: correction does not reproduce the syndrome")]
    AuditFailure { shot: usize },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
