use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid or unresolvable configuration. Raised before any compute.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("estimator `{estimator}` failed: {message}")]
    Estimator { estimator: String, message: String },

    /// An estimation ran past its wall-clock deadline and was abandoned.
    #[error("estimator `{estimator}` exceeded the feasibility cutoff after {elapsed:.3} s")]
    Cutoff { estimator: String, elapsed: f64 },

    #[error("loss normalizer is zero: every relevance mask is empty or every weight is zero")]
    DegenerateNormalizer,

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that the CLI reports with the configuration exit code.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
