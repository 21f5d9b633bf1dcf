use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad IDX magic number {magic:#010x}")]
    BadMagic { path: PathBuf, magic: u32 },
    #[error("{path}: file truncated (expected {expected} payload bytes, found {found})")]
    TruncatedFile { path: PathBuf, expected: usize, found: usize },
    #[error("image file has {images} items but label file has {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    RaggedRow { path: PathBuf, line: u64, expected: usize, found: usize },
    #[error("{path}: no label column {column:?}")]
    UnknownLabelColumn { path: PathBuf, column: String },
    #[error("{path}: line {line}, column {column:?}: not a number: {value:?}")]
    NonNumericCell { path: PathBuf, line: u64, column: String, value: String },
    #[error("{path}: label {label:?} was not seen in the training data")]
    UnknownLabel { path: PathBuf, label: String },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Model { path: PathBuf, message: String },
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("unknown config key {0:?}")]
    UnknownConfigKey(String),
    #[error("config key {key:?}: {message}")]
    ConfigValue { key: String, message: String },
    #[error("missing required setting {0:?}")]
    MissingSetting(&'static str),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] hwforest_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn value(key: &str, message: impl Into<String>) -> Self {
        Error::ConfigValue { key: key.to_string(), message: message.into() }
    }
}
