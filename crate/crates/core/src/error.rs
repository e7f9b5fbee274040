use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("bounds error: {0}")]
    Bounds(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid specs do not match: {0}")]
    SpecMismatch(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("regularity error: {0}")]
    Regularity(String),

    #[error("insufficient boundary samples: {found} valid, {required} required")]
    InsufficientBoundary { found: usize, required: usize },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("value overflow: {0}")]
    Overflow(String),

    #[error("solve failed while perturbing coefficient {index}: {source}")]
    Coefficient {
        index: usize,
        #[source]
        source: Box<ShapeError>,
    },

    #[error("invalid field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ShapeError>;

impl From<csv::Error> for ShapeError {
    fn from(e: csv::Error) -> Self {
        ShapeError::Io(std::io::Error::other(e.to_string()))
    }
}

impl ShapeError {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        ShapeError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
