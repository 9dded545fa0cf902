use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("{}:{line}: {msg}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("surface projection did not converge for {failed} of {total} candidates")]
    ConvergenceFailure { failed: usize, total: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("training diverged at epoch {epoch} (optimizer step {step})")]
    TrainingDiverged { epoch: usize, step: u64 },

    #[error("no zero crossing found on the extraction grid")]
    EmptySurface,

    #[error("metric input point set is empty")]
    EmptySet,

    #[error("point set has no normals")]
    MissingNormals,

    #[error("mesh has no edge with exactly two incident faces")]
    NoInteriorEdges,

    #[error("mesh has zero surface area")]
    ZeroArea,

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TrainingDiverged { .. } => 2,
            Error::EmptySurface => 3,
            _ => 1,
        }
    }
}
