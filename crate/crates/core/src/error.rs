use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {frequency:.6e} Hz with bandwidth {bandwidth:.6e} Hz aliases on a grid sampled at {sample_rate:.6e} Hz")]
    Aliasing {
        frequency: f64,
        bandwidth: f64,
        sample_rate: f64,
    },

    #[error("fields do not share a time grid")]
    GridMismatch,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("band [{low:.6e}, {high:.6e}] Hz exceeds the simulation band ±{nyquist:.6e} Hz")]
    BandOutsideGrid { low: f64, high: f64, nyquist: f64 },

    #[error("unsupported PRBS order {0} (expected 7, 15, 23 or 31)")]
    UnsupportedPrbsOrder(u32),

    #[error("grid too short: {needed} samples needed, {available} available")]
    GridTooShort { needed: usize, available: usize },

    #[error("non-finite samples after step at z = {z_km:.4} km (step too large?)")]
    NonFinite { z_km: f64 },

    #[error("walk-off {walkoff_ps:.1} ps per span exceeds 10% of the {duration_ps:.1} ps grid")]
    WalkOff { walkoff_ps: f64, duration_ps: f64 },

    #[error("{masked} of {total} samples masked; probe pulse shape or alignment is wrong")]
    ExcessiveMasking { masked: usize, total: usize },

    #[error("ambiguous correlation peak at lags {first} and {second}")]
    AmbiguousAlignment { first: usize, second: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("insufficient samples: {needed} needed, {available} available")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("query outside lookup table: {0}")]
    OutsideLut(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("malformed record: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
