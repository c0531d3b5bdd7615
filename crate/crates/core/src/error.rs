//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tensor extent did not match what an operation required.
    /// `axis` names the offending axis (e.g. "channel", "time").
    #[error("{op}: axis `{axis}` mismatch: expected {expected}, got {actual}")]
    AxisMismatch {
        op: &'static str,
        axis: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An argument violated an operation's preconditions.
    #[error("{op}: {msg}")]
    InvalidArgument { op: &'static str, msg: String },

    #[error("wav: {0}")]
    Wav(#[from] WavError),

    #[error("container: {0}")]
    Container(#[from] ContainerError),

    #[error("tsv {path}:{line}: {msg}")]
    Tsv {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidArgument {
            op,
            msg: msg.into(),
        }
    }
}

/// Errors from decoding RIFF/WAVE files.
#[derive(Debug, Error)]
pub enum WavError {
    #[error("not a RIFF/WAVE file")]
    NotRiffWave,
    #[error("unsupported codec: format tag {format_tag}, {bits} bits (PCM16 or float32 required)")]
    UnsupportedCodec { format_tag: u16, bits: u16 },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("file contains no samples")]
    ZeroLength,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors from the binary container formats (feature, weight and score dumps).
#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unknown version {0}")]
    UnknownVersion(u32),
    #[error("truncated payload: {0}")]
    Truncated(String),
    #[error("duplicate tensor name `{0}`")]
    DuplicateName(String),
    #[error("malformed entry: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
