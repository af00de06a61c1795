//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("root finder did not converge within {max_iters} iterations")]
    RootsNotConverged { max_iters: usize },

    #[error("coefficient halving exceeded {cap} rounds without reaching the stable region")]
    HalvingCapExceeded { cap: usize },

    #[error("invalid ARMA specification: {0}")]
    InvalidSpec(String),

    #[error("burn-in requires min AR root modulus > 1, got {0}")]
    BurnInDomain(f64),

    #[error("series is degenerate (zero variance)")]
    DegenerateSeries,

    #[error("series too short: need at least {need} values, got {got}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("noise regeneration exceeded {cap} retries")]
    NoiseRetriesExceeded { cap: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("batch normalization requires batch size >= 2 in training mode, got {0}")]
    BatchTooSmall(usize),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("input length {got} does not match network input length {expected}")]
    InputLengthMismatch { got: usize, expected: usize },

    #[error("non-finite gradient encountered; optimizer step aborted")]
    NonFiniteGradient,

    #[error("training diverged: window mean error {mean} exceeds abort threshold {threshold}")]
    TrainingDiverged { mean: f64, threshold: f64 },

    #[error("coefficients lie outside the stationary/invertible region (min root modulus {0})")]
    UnstableCoefficients(f64),

    #[error(
        "Kalman filter lost positive definiteness at step {step} (prediction variance {variance})"
    )]
    FilterNotPositiveDefinite { step: usize, variance: f64 },

    #[error("all candidate models failed to fit")]
    AllFitsFailed,

    #[error("empty subset: no series match the filter")]
    EmptySubset,

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("malformed header entry `{0}`")]
    HeaderParse(String),

    #[error("incompatible checkpoints: {0}")]
    IncompatibleCheckpoints(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("file truncated while reading {0}")]
    Truncated(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
