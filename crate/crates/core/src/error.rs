use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("symbol {symbol} at position {position} is outside the alphabet of size {sigma}")]
    Alphabet {
        symbol: u32,
        position: usize,
        sigma: u32,
    },

    #[error("input of {len} symbols exceeds the supported maximum of {max}")]
    Capacity { len: usize, max: usize },

    #[error("position {0} does not start a symbol")]
    Position(usize),

    #[error("queue contract violated: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed grammar: {0}")]
    Grammar(String),

    #[error("truncated bit stream")]
    Truncated,

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("not an archive (bad magic)")]
    BadMagic,

    #[error("unsupported archive version {0}")]
    BadVersion(u8),

    #[error("checksum mismatch: header says {expected:#010x}, payload hashes to {actual:#010x}")]
    Checksum { expected: u32, actual: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corrupt(msg.into())
    }

    /// True for errors caused by the data being processed rather than by
    /// the caller or the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Config(_))
    }
}
