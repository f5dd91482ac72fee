use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("temperature {0} °C outside the modulus validity window [-40, 100] °C")]
    TemperatureOutOfDomain(f64),

    #[error("year {year} is not fully covered by the time grid ({hours} of {expected} hours)")]
    IncompleteYear { year: i32, hours: usize, expected: usize },

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("corrosion depth {depth} mm consumes the section (limit {limit} mm)")]
    SectionConsumed { depth: f64, limit: f64 },

    #[error("decay rate {0} must lie in [0, 1)")]
    InvalidDecayRate(f64),

    #[error("non-positive equivalent mass {0} kg")]
    NonPositiveMass(f64),

    #[error("state-space integration diverged at sample {0}")]
    Unstable(usize),

    #[error("signal is all zero or non-finite")]
    DegenerateSignal,

    #[error("fault window [{start}, {end}] outside signal of length {len}")]
    WindowOutOfBounds { start: usize, end: usize, len: usize },

    #[error("infeasible fault policy: {0}")]
    InfeasiblePolicy(String),

    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("checksum mismatch for {0}")]
    ChecksumMismatch(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Hdf5(#[from] hdf5::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
