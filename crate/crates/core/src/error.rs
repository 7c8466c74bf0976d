use thiserror::Error;

pub type Result<T> = std::result::Result<T, LdlError>;

#[derive(Debug, Error)]
pub enum LdlError {
    #[error(
        "column {index} is not a probability distribution (sum {sum}); {offending} offending column(s): {columns:?}"
    )]
    ColumnNotSimplex {
        index: usize,
        sum: f64,
        offending: usize,
        columns: Vec<usize>,
    },

    #[error("column {0} of the multi-label matrix has no relevant label")]
    EmptyLabelSet(usize),

    #[error("entry ({row}, {col}) of the multi-label matrix is {value}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: f64 },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid hyperparameter `{name}`: {reason}")]
    InvalidHyperparameter { name: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("linear system is singular or not positive definite ({0})")]
    SingularSystem(&'static str),

    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("model format error: {0}")]
    ModelFormat(String),
}

impl LdlError {
    pub(crate) fn dims(what: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        LdlError::DimensionMismatch {
            what,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
