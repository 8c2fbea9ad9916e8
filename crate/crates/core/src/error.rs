use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A field of a network entity is missing, malformed or out of range.
    #[error("{entity} `{id}`: field `{field}`: {message}")]
    Field {
        entity: &'static str,
        id: String,
        field: String,
        message: String,
    },

    /// An entity refers to a junction (or time series) that does not exist.
    #[error("{entity} `{id}`: field `{field}` refers to unknown {target} `{name}`")]
    Reference {
        entity: &'static str,
        id: String,
        field: &'static str,
        target: &'static str,
        name: String,
    },

    #[error("malformed network document: {0}")]
    Document(#[from] serde_json::Error),

    #[error("unknown quantity kind `{0}`")]
    UnknownKind(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible bounds on `{name}`: lower {lower} > upper {upper}")]
    InfeasibleBounds { name: String, lower: f64, upper: f64 },

    #[error("non-finite value in {what} `{name}`")]
    NonFinite { what: &'static str, name: String },

    #[error("simulation failed at step {step} (t = {time_s} s): worst residual {residual:e} in `{name}`")]
    Simulation {
        step: usize,
        time_s: f64,
        residual: f64,
        name: String,
    },

    #[error("linear algebra failure: {0}")]
    Linear(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn field(
        entity: &'static str,
        id: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Field {
            entity,
            id: id.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
