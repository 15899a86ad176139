use std::path::PathBuf;

/// Errors produced by the simulation, inference and training routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The sampled measurement branch has (numerically) zero probability and
    /// its post-measurement state cannot be normalized.
    #[error("degenerate branch: outcome {outcome} has probability {probability:e}")]
    DegenerateBranch { outcome: u8, probability: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    /// Sharpness below threshold, Holevo variance is effectively infinite.
    #[error("unsharp estimates: sharpness {0:e}")]
    Unsharp(f64),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (as opposed to I/O or bad input files).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DegenerateBranch { .. }
                | Error::Resource(_)
                | Error::Unsharp(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
