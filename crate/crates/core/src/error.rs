use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid interval: t0 = {t0}, t1 = {t1}")]
    InvalidInterval { t0: f64, t1: f64 },

    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("invalid party credit: {0}")]
    InvalidParty(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid collateral: {0}")]
    InvalidCollateral(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("Picard iteration did not converge at step {step} (t = {time:.6}): residual {residual:e} after {iterations} iterations")]
    PicardNonConvergence {
        step: usize,
        time: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("non-finite value in solution at step {step} (t = {time:.6})")]
    NonFinite { step: usize, time: f64 },

    #[error("query (t = {t}, S = {spot}) outside grid domain")]
    OutOfDomain { t: f64, spot: f64 },

    #[error("lattice risk-neutral probability {probability} outside (0, 1) at step {step}")]
    InvalidProbability { step: usize, probability: f64 },

    #[error("instrument is not single-signed: {0}")]
    MixedSign(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid quadrature grid: {0}")]
    InvalidQuadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
