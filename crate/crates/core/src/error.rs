//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be an even integer >= 4, got {0}")]
    InvalidGridSize(usize),

    #[error("time must be >= 0, got {0}")]
    NegativeTime(f64),

    #[error("time must be > 0, got {0}")]
    NonPositiveTime(f64),

    #[error("Lorentz exponent p must be >= 1, got {0}")]
    InvalidFirstExponent(f64),

    #[error("Lorentz exponent r must be >= 1, got {0}")]
    InvalidSecondExponent(f64),

    #[error("embedding check requires q in (1, 2), got {0}")]
    InvalidEmbeddingExponent(f64),

    #[error("spectral decay exponent must be > 1, got {0}")]
    InvalidSpectralDecay(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("field is not divergence-free: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotDivergenceFree { residual: f64, tol: f64 },

    #[error("Picard iteration did not converge within {iters} iterations, residual {residual:.3e}")]
    PicardNonConvergence { iters: usize, residual: f64 },

    #[error("step failed at t = {time}: {source}")]
    StepFailed {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("t = {0} is not a trajectory sample time")]
    NotASampleTime(f64),

    #[error("no trajectory samples in the window ({lo}, {hi}]")]
    EmptySampleWindow { lo: f64, hi: f64 },

    #[error("quadrature interval requires t > t0, got t0 = {t0}, t = {t}")]
    InvalidQuadratureInterval { t0: f64, t: f64 },

    #[error("time grids do not match: {0}")]
    MismatchedTimeGrid(String),

    #[error("no grid-converged kernel norm entry in the requested range")]
    NoConvergedEntry,

    #[error("delta underflow: kappa target {target} unreachable before delta < dt = {dt}")]
    DeltaUnderflow { target: f64, dt: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid state file: {0}")]
    InvalidStateFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
