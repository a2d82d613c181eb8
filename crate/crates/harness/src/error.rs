use std::path::PathBuf;

use skpk_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot encode report: {0}")]
    Encode(String),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for exceeded size limits,
    /// 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(CoreError::Capacity { .. })
            | HarnessError::Core(CoreError::SearchOverflow { .. }) => 3,
            HarnessError::Core(_)
            | HarnessError::Config(_)
            | HarnessError::Read { .. }
            | HarnessError::Parse { .. } => 2,
            HarnessError::Write { .. } | HarnessError::Encode(_) => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
