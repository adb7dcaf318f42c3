use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("channel is identically zero")]
    ZeroChannel,

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    /// Requested output power exceeds the PA saturation power.
    #[error("PA overdriven: output power {power} exceeds p_max {p_max}")]
    Overdrive { power: f64, p_max: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (primal {primal_residual:.3e}, dual {dual_residual:.3e})")]
    NotConverged {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("too many failed trials: {failures} of {trials} at M = {antennas}")]
    TooManyFailures {
        antennas: usize,
        failures: usize,
        trials: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
