use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (symmetric part norm {0:e})")]
    NotSkewSymmetric(f64),
    #[error("matrix is not orthonormal (|R^T R - I|_F = {0:e})")]
    NotOrthonormal(f64),
    #[error("matrix is not a proper rotation (det = {0})")]
    NotProperRotation(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("desired thrust vector is degenerate (norm {0:e})")]
    DegenerateThrust(f64),
    #[error("consecutive reference attitudes are {0} rad apart; log map branch is ambiguous")]
    LogBranch(f64),
    #[error("Euler angle singularity (pitch = {0} rad)")]
    EulerSingularity(f64),
    #[error("non-finite value in simulation state")]
    NonFinite,
    #[error("run contains no records")]
    EmptyRun,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, with any step annotation stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
