use thiserror::Error;

/// Errors produced by the simulator and its optimizers.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or record document could not be parsed.
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    /// A configuration parsed but violates one or more model constraints.
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// Two nodes that must be distinct coincide.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// An argument lies outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or vector dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A search was asked to pick from an empty set.
    #[error("empty search domain: {0}")]
    EmptyDomain(String),

    /// A lifted quantity that must be non-negative went negative beyond tolerance.
    #[error("numerically infeasible: {0}")]
    NumericalInfeasibility(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown sweep variable `{0}`")]
    UnknownVariable(String),

    /// Malformed realization archive.
    #[error("archive error at line {line}: {message}")]
    Archive { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
