use thiserror::Error;

use crate::config::Branch;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CasimirError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid motion: {0}")]
    InvalidMotion(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{branch} mode {k} out of range (cutoff {cutoff})")]
    IndexOutOfRange { branch: Branch, k: usize, cutoff: usize },

    /// A cavity pole and a reservoir pole sit inside the bracket padding.
    #[error("bracket collision for {branch} mode {k}: poles {pole:.12} and {other:.12} closer than padding")]
    BracketCollision { branch: Branch, k: usize, pole: f64, other: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },

    #[error("degenerate normalization for {branch} mode {k}: continuity system is singular")]
    DegenerateNormalization { branch: Branch, k: usize },

    #[error("quadrature failed on [{a}, {b}]: error estimate {error:e} above tolerance {tolerance:e}")]
    Quadrature { a: f64, b: f64, error: f64, tolerance: f64 },

    #[error("Fock truncation insufficient: norm deficit {deficit:e}")]
    TruncationInsufficient { deficit: f64 },

    #[error("no resonance at p = {p}: entropy has no positive tau^2 coefficient")]
    NoResonance { p: f64 },

    #[error("Hilbert-space dimension {dimension} exceeds cap {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("trace drift {drift:e} exceeds tolerance")]
    TraceDrift { drift: f64 },
}

pub type Result<T> = std::result::Result<T, CasimirError>;
