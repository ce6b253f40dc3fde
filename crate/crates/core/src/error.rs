use thiserror::Error;

pub type Result<T> = std::result::Result<T, OdpoError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdpoError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} has norm {norm} which exceeds the bound {bound}")]
    NormViolation { what: String, norm: f64, bound: f64 },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("difference arms do not span R^{0}")]
    SpanDeficient(usize),

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error("{solver} did not converge within {iters} iterations")]
    MaxIters { solver: &'static str, iters: usize },

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for OdpoError {
    fn from(e: std::io::Error) -> Self {
        OdpoError::Io(e.to_string())
    }
}

impl OdpoError {
    /// Variant name, used as a status tag in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            OdpoError::DimensionMismatch { .. } => "DimensionMismatch",
            OdpoError::NormViolation { .. } => "NormViolation",
            OdpoError::NonFinite(_) => "NonFinite",
            OdpoError::SpanDeficient(_) => "SpanDeficient",
            OdpoError::SingularMatrix => "SingularMatrix",
            OdpoError::MaxIters { .. } => "MaxIters",
            OdpoError::InvalidScale(_) => "InvalidScale",
            OdpoError::DomainError(_) => "DomainError",
            OdpoError::InvalidArgument(_) => "InvalidArgument",
            OdpoError::Parse { .. } => "Parse",
            OdpoError::Io(_) => "Io",
        }
    }
}
