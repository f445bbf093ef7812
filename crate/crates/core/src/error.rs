use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("adjacency is {rows}x{cols} but the alphabet has {size} symbols")]
    DimensionMismatch { rows: usize, cols: usize, size: usize },

    #[error("adjacency entry ({row}, {col}) is {value}, expected 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: i64 },

    #[error("empty row {0}: symbol has no outgoing transition")]
    EmptyRow(usize),

    #[error("empty column {0}: symbol has no incoming transition")]
    EmptyColumn(usize),

    #[error("symbol index {index} out of bounds for alphabet of size {size}")]
    IndexOutOfBounds { index: usize, size: usize },

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("enumeration limit of {limit} exceeded")]
    EnumerationLimit { limit: usize },

    #[error("missing potential entry for admissible word {0}")]
    MissingEntry(String),

    #[error("non-positive weight for word {0}")]
    NonPositiveWeight(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("word of length {len} is too short, need at least {min}")]
    WordTooShort { len: usize, min: usize },

    #[error("inadmissible word {0}")]
    Inadmissible(String),

    #[error("block shift is not topologically mixing")]
    NotMixing,

    #[error("power iteration did not converge in {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("exact arithmetic unavailable: {0}")]
    ExactUnavailable(String),

    #[error("exact eigen-data verification failed: {0}")]
    ExactVerification(String),

    #[error("factor map does not map symbol {0:?}")]
    UnmappedSymbol(String),

    #[error("image symbol {0:?} has an empty fiber")]
    EmptyFiber(String),

    #[error("vectors have dimensions {0} and {1}")]
    VectorDimension(usize, usize),

    #[error("vector has no strictly positive entry")]
    ZeroVector,

    #[error("Hilbert distance is infinite")]
    InfiniteDistance,

    #[error("matrix column {0} is zero")]
    ZeroColumn(usize),

    #[error("degenerate image: {0}")]
    DegenerateImage(String),

    #[error("decay fit needs at least 3 positive points, found {0}")]
    InsufficientPoints(usize),

    #[error("rate comparison requires an exponential fit, got {0}")]
    WrongClassification(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid value for {key}: {message}")]
    Validation { key: String, message: String },
}
