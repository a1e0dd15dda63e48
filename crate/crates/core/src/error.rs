use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("value {value} outside the open interval (0,1) ({context})")]
    Domain { value: f64, context: &'static str },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "numerical boundary collapse at t = {t}: {detail} \
         (values numerically indistinguishable from 0 or 1)"
    )]
    BoundaryCollapse { t: usize, detail: String },

    #[error(
        "shape lambda = {0} < 1 produces bathtub-shaped innovations that collapse to the \
         boundaries; pass the force flag to simulate anyway"
    )]
    SmallShape(f64),

    #[error("singular or indefinite information matrix (smallest eigenvalue {min_eigenvalue:e})")]
    SingularInformation { min_eigenvalue: f64 },

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("missing future covariates: forecasting {h} steps with {r} covariates needs an {h}x{r} matrix, got {rows} rows")]
    MissingFutureCovariates { h: usize, r: usize, rows: usize },

    #[error("{path}: line {line}: {message}")]
    Data {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
