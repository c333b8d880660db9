use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in a line-delimited file did not match its schema.
    #[error("{path}:{line}: {field}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("unknown relationship label `{0}`")]
    UnknownLabel(String),

    #[error("unstructured input: {0}")]
    Unstructured(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("environment variable {0} is not set")]
    MissingEnv(String),

    #[error("empty context: every scene position is masked")]
    EmptyContext,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("title not found: {0}")]
    TitleNotFound(String),

    /// Transport or server failure that may succeed on retry.
    #[error("http error (retriable): {0}")]
    Http(String),

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("request for {key} failed after {attempts} attempts: {message}")]
    RetriesExhausted {
        key: String,
        attempts: u32,
        message: String,
    },

    #[error("missing truth label for {0}")]
    MissingTruth(String),

    #[error("instance keys differ between prediction sets: {0}")]
    KeyMismatch(String),

    #[error("chance agreement is 1 while observed agreement is {0}; kappa undefined")]
    UndefinedKappa(f64),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures in the input data rather than in the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::MissingEnv(_) | Error::Http(_) | Error::RetriesExhausted { .. }
        )
    }
}
