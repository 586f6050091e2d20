use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{n} sites exceeds the cap of {cap} for this operation")]
    TooLarge { n: usize, cap: usize },

    #[error("mean spin vanishes; squeezing parameter is undefined")]
    VanishingMeanSpin,

    #[error("Krylov step underflow at t = {t} (step {step:e}, error estimate {estimate:e})")]
    StepUnderflow { t: f64, step: f64, estimate: f64 },

    #[error("ground-state gap {gap:e} below {threshold:e} at lambda = {lambda}")]
    GapCollapse { lambda: f64, gap: f64, threshold: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
