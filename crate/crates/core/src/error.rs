use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),

    #[error("non-finite observation at index {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cascade iteration did not converge after {iterations} iterations (last sup-norm change {delta:e})")]
    CascadeDiverged { iterations: usize, delta: f64 },

    #[error("adaptive quadrature did not reach tolerance {tol:e} on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64, tol: f64 },

    #[error("rejection sampler exhausted {0} proposals")]
    RejectionExhausted(u64),

    #[error("integration grid [{grid_lo}, {grid_hi}] does not cover [{lo}, {hi}]")]
    GridCoverage {
        grid_lo: f64,
        grid_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("cache format: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
