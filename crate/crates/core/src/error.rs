use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPositiveDefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("variable {variable} has communality {communality} >= 1")]
    CommunalityAtLeastOne { variable: usize, communality: f64 },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("loading matrix is singular: L'Psi^-2 L cannot be inverted")]
    SingularLoadings,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("loading grid is empty")]
    EmptyGrid,

    #[error("column {column} has zero variance")]
    ZeroVarianceColumn { column: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("records cannot be collapsed: {0}")]
    InconsistentCoordinates(String),

    #[error("condition {condition}: {source}")]
    Condition {
        condition: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_condition(self, condition: impl Into<String>) -> Self {
        Error::Condition {
            condition: condition.into(),
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
