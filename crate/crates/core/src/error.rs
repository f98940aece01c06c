use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("malformed interval [{lo}, {hi}]")]
    MalformedInterval { lo: f64, hi: f64 },

    #[error("unknown density specification `{0}`")]
    UnknownDensity(String),

    #[error("perturbation amplitude {delta} exceeds the admissible maximum {delta_max} ({condition} condition)")]
    DeltaTooLarge {
        delta: f64,
        delta_max: f64,
        condition: &'static str,
    },

    #[error("rejection sampler gave up after {0} consecutive rejections")]
    RejectionExhausted(u64),

    #[error("bandwidth {h} leaves fewer than one bin on an interval of length {len}")]
    BandwidthTooLarge { h: f64, len: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("batch kind mismatch: expected {expected}, got {got}")]
    BatchKind { expected: &'static str, got: &'static str },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("privacy audit failed: ratio {ratio} exceeds e^alpha = {bound}")]
    PrivacyViolation { ratio: f64, bound: f64 },

    #[error("rate fit needs at least {needed} uncensored points, got {got}")]
    InsufficientGrid { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
