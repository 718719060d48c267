use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid geometry: disk {disk}: {reason}")]
    Geometry { disk: usize, reason: String },

    #[error("meshing failed for disk {disk}: {reason}")]
    Meshing { disk: usize, reason: String },

    #[error("meshing failed: {0}")]
    MeshingGeneric(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "parameter mu[{index}] = {value:e} is not positive; the benchmark bounds parameters below by 1e-6"
    )]
    NonPositiveParameter { index: usize, value: f64 },

    #[error("parameter {index} = {value:e} lies outside the box [{lo:e}, {hi:e}]")]
    ParameterRange {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("system s*E - A(mu) is singular at s = {re:e}{im:+e}i")]
    SingularShift { re: f64, im: f64 },

    #[error("linear solve did not reach relative residual {tol:e} (got {residual:e})")]
    Residual { residual: f64, tol: f64 },

    #[error("non-finite state detected at time step {step}")]
    NonFinite { step: usize },

    #[error("state for step {step} was not stored")]
    NotStored { step: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by the filesystem or malformed input files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. } | Error::Format(_))
    }

    /// True for errors caused by bad user input.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Geometry { .. }
                | Error::NonPositiveParameter { .. }
                | Error::ParameterRange { .. }
                | Error::Dimension(_)
        )
    }
}
