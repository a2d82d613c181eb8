use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// A probability table failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// An enumeration or table would exceed a configured size limit.
    #[error("capacity error: {what} needs {required} entries, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    /// A typicality search would visit more candidates than allowed.
    #[error("search overflow: {candidates} candidates exceed the cap of {cap}")]
    SearchOverflow { candidates: u128, cap: u128 },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
