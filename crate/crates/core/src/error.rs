use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,

    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("id {id} out of range for {len} points")]
    InvalidId { id: usize, len: usize },

    #[error("invalid tolerance {value}: must be finite and nonnegative")]
    InvalidTolerance { value: f64 },

    #[error("invalid sampling pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fingerprint for T1 = {t1} ms, T2 = {t2} ms: {reason}")]
    Fingerprint { t1: f64, t2: f64, reason: String },

    #[error("pixel {pixel}: T1 = {t1} ms, T2 = {t2} ms not present in the dictionary grid")]
    ParameterNotInGrid { pixel: usize, t1: f64, t2: f64 },

    #[error("pixel {pixel}: {source}")]
    Pixel {
        pixel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite iterate at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("projection contract violated at iteration {iteration}, pixel {pixel}: {detail}")]
    ContractViolation {
        iteration: usize,
        pixel: usize,
        detail: String,
    },

    #[error("all point pairs are identical; embedding constants undefined")]
    DegeneratePairs,

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
