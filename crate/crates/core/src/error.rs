use thiserror::Error;

/// Errors produced by spectrum generation, statistics and orbit sums.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "semiclassical window violated: eps_max = {eps_max} exceeds {window_fraction} * 2 * beta = {limit}"
    )]
    WindowViolated {
        eps_max: f64,
        window_fraction: f64,
        limit: f64,
    },

    #[error("interval [{lo}, {hi}] is not inside the spectrum window [{window_lo}, {window_hi}]")]
    IntervalOutsideWindow {
        lo: f64,
        hi: f64,
        window_lo: f64,
        window_hi: f64,
    },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("curve does not cover [0, {width}]: {reason}")]
    GridCoverage { width: f64, reason: String },

    #[error("orbit sum did not converge before M_r = {m_cut_max}")]
    NonConvergence { m_cut_max: u64 },

    #[error("no bound classical motion: {0}")]
    Unbound(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
