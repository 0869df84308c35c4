use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape mismatch: {0}")]
    Shape(String),

    #[error("field contains a non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error(
        "spectral field is not Hermitian (max asymmetry {asymmetry:.3e} vs scale {scale:.3e})"
    )]
    NotHermitian { asymmetry: f64, scale: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    /// The director vanished somewhere and cannot be renormalized.
    #[error("zero-length director at t = {t} (grid point {point})")]
    ZeroDirector { t: f64, point: usize },

    /// The solution stopped being finite.
    #[error("solution diverged at t = {t}")]
    Diverged { t: f64 },

    /// A ratio whose denominator vanished.
    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("config: field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("diagnostics table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// True for the failures that mark a possible singularity of the flow.
    pub fn is_singularity(&self) -> bool {
        matches!(self, Error::ZeroDirector { .. } | Error::Diverged { .. })
    }
}
