use thiserror::Error;

/// Errors raised anywhere in the lab.
///
/// A rejected forgery is not an error: verification returns a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("block width mismatch: {left} bits vs {right} bits")]
    WidthMismatch { left: u32, right: u32 },

    #[error("invalid block width {bits}: {reason}")]
    InvalidWidth { bits: u32, reason: &'static str },

    #[error("value does not fit in {bits} bits")]
    ValueOutOfRange { bits: u32 },

    #[error("table cipher capacity exceeded: {bits} bits requested, at most {max} supported")]
    Capacity { bits: u32, max: u32 },

    #[error("cipher configuration error: {0}")]
    Config(String),

    #[error("message of {blocks} blocks exceeds the mode limit of {max} blocks")]
    LengthLimit { blocks: usize, max: usize },

    #[error("empty message")]
    EmptyMessage,

    #[error("sequence number space exhausted")]
    SequenceExhausted,

    #[error("IV pair unavailable: {0}")]
    MissingIvs(&'static str),

    #[error("initial values F0 and G0 must be distinct")]
    EqualIvs,

    #[error("malformed container: {0}")]
    Format(String),

    #[error("invalid hex: {0}")]
    Hex(String),

    #[error("block index {index} out of range: {constraint}")]
    IndexOutOfRange { index: usize, constraint: String },

    #[error("{0} requires a linear feedback function")]
    NonLinearFeedback(&'static str),

    #[error("{attack} is not applicable to {mode}")]
    WrongMode { attack: &'static str, mode: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
