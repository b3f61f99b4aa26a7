use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("hip-to-hip horizontal projection is degenerate (norm {norm} < {tolerance})")]
    DegenerateOrientation { norm: f64, tolerance: f64 },
    #[error("frame {frame} tracks {found} objects, more than the configured maximum {max}")]
    ObjectOverflow { frame: usize, found: usize, max: usize },
    #[error("invalid filter window {window}: must be odd and positive")]
    InvalidWindow { window: usize },
    #[error("signal of length {len} too short: {required} required")]
    SignalTooShort { len: usize, required: usize },
    #[error("empty sequence passed to DTW")]
    EmptySequence,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no training samples for class {class}")]
    EmptyClass { class: usize },
    #[error("not enough subjects: need {required}, have {available}")]
    InsufficientSubjects { required: usize, available: usize },
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("parse error in {file}:{line}: {message}")]
    ParseError { file: String, line: usize, message: String },
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("label mapping error: {0}")]
    LabelMapError(String),
    #[error("config error: {0}")]
    ConfigError(String),
    #[error("invalid synthetic-data spec: {0}")]
    InvalidSpec(String),
    #[error("confusion matrix is not square: {rows} rows, {cols} cols")]
    NonSquareMatrix { rows: usize, cols: usize },
    #[error("model bundle version {found} not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model bundle: {0}")]
    CorruptBundle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
