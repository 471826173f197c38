use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// Variant names double as the error names printed by the command-line tool.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("SchemaError: {0}")]
    Schema(String),
    #[error("ValidationError: {0}")]
    Validation(String),
    #[error("ParseError at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("MappingError: no concordance rule for codes {}", .codes.join(", "))]
    Mapping { codes: Vec<String> },
    #[error("OrientationError: {0}")]
    Orientation(String),
    #[error("UsageError: {0}")]
    Usage(String),
    #[error("NumericalError: {0}")]
    Numerical(String),
    #[error("DegenerateError: {0}")]
    Degenerate(String),
    #[error("IoError: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Schema(_) => "SchemaError",
            Error::Validation(_) => "ValidationError",
            Error::Parse { .. } => "ParseError",
            Error::Mapping { .. } => "MappingError",
            Error::Orientation(_) => "OrientationError",
            Error::Usage(_) => "UsageError",
            Error::Numerical(_) => "NumericalError",
            Error::Degenerate(_) => "DegenerateError",
            Error::Io(_) => "IoError",
        }
    }

    /// True for errors caused by malformed or invalid input files.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Schema(_) | Error::Validation(_) | Error::Parse { .. } | Error::Mapping { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
