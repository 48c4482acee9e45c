use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty tag string")]
    EmptyTag,

    #[error("malformed tag atom `{0}` (expected feature=value)")]
    MalformedAtom(String),

    #[error("feature `{feature}` occurs twice in tag `{tag}`")]
    DuplicateFeature { feature: String, tag: String },

    #[error("tag `{0}` is reserved for sentence boundaries")]
    ReservedTag(String),

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },

    #[error("model checksum mismatch")]
    Checksum,

    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("model was not trained with method {0}")]
    MissingSource(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("gold has {gold} tokens but prediction has {predicted}")]
    LengthMismatch { gold: usize, predicted: usize },

    #[error("enumeration needs {paths} paths, cap is {cap}")]
    EnumerationCap { paths: u128, cap: u128 },

    #[error("generator profile: {0}")]
    Profile(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
