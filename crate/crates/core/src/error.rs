use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e}, norm {norm:.3e})")]
    NotHermitian { asymmetry: f64, norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("denominator of the pencil is not positive definite after ridge {ridge:.3e}")]
    NotPositiveDefinite { ridge: f64 },

    #[error("reflection coefficient {index} has modulus {modulus} > rho_max {rho_max}")]
    ReflectionBound {
        index: usize,
        modulus: f64,
        rho_max: f64,
    },

    #[error("coincident BS antenna {bs} and RIS element {ris}")]
    CoincidentElements { bs: usize, ris: usize },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("too few snapshots: {snapshots} < {sources} sources")]
    RankDeficient { snapshots: usize, sources: usize },

    #[error("non-finite value in {what} at episode {episode}")]
    NonFinite { what: String, episode: usize },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
