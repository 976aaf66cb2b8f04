use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state space: {0}")]
    InvalidSpace(String),

    #[error("invalid trap array: {0}")]
    InvalidTraps(String),

    #[error("invalid capture data: {0}")]
    InvalidData(String),

    #[error("augmentation bound M={m} cannot host {needed} observed rows")]
    Infeasible { m: usize, needed: usize },

    #[error("malformed permutation: {0}")]
    Permutation(String),

    #[error("infeasible linkage proposal: {0}")]
    InfeasibleProposal(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("instance exceeds oracle bounds: {0}")]
    OracleBounds(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
