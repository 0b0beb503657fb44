use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// Binary-format errors carry the byte offset at which decoding stopped so a
/// corrupt export can be located with a hex dump.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic at byte offset {offset}: expected \"EMB1\"")]
    BadMagic { offset: u64 },

    #[error("unknown dtype code {code} at byte offset {offset}")]
    BadDtype { offset: u64, code: u8 },

    #[error("truncated file: needed {needed} bytes at byte offset {offset}")]
    TruncatedFile { offset: u64, needed: u64 },

    #[error("non-finite value at byte offset {offset}")]
    NonFiniteValue { offset: u64 },

    #[error("matrix shape {n}x{d} is invalid: {reason}")]
    InvalidShape { n: usize, d: usize, reason: String },

    #[error("label file is missing column \"{0}\"")]
    MissingColumn(String),

    #[error("label file line {line}: {message}")]
    LabelParse { line: u64, message: String },

    #[error("sample_index {0} appears more than once")]
    DuplicateIndex(usize),

    #[error("sample indices are not a permutation of 0..{n}: index {index} is out of range")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("subclass {subclass} is listed under superclasses {first} and {second}")]
    SubclassInTwoSuperclasses {
        subclass: usize,
        first: usize,
        second: usize,
    },

    #[error("cannot cluster an empty input")]
    EmptyInput,

    #[error("k = {k} is out of range for {n} samples")]
    KOutOfRange { k: usize, n: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("contingency table is empty")]
    EmptyTable,

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("hierarchy shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("subclass {0} does not appear in the hierarchy")]
    UnknownSubclass(usize),

    #[error("superclass {superclass} has {n} sample(s); at least 2 are required")]
    SuperclassTooSmall { superclass: usize, n: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no layer names are shared between the two runs")]
    NoSharedLayers,

    #[error("labels contain a single class; a probe needs at least 2")]
    SingleClass,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("chart needs at least one non-empty series with finite values")]
    EmptySeries,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
