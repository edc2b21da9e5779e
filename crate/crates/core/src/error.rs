use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed noise spec `{spec}`: bad token `{token}` ({reason})")]
    NoiseSpec {
        spec: String,
        token: String,
        reason: String,
    },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("tensor: {0}")]
    Tensor(String),

    #[error("matching: {0}")]
    Matching(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
