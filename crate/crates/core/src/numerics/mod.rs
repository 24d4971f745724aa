//! Special functions, compensated summation, log-space magnitudes and
//! adaptive quadrature with divergence detection.
//!
//! Everything here is pure and reentrant.

mod kahan;
mod logmag;
mod quadrature;
mod special;

pub use kahan::{compensated_sum, KahanSum};
pub use logmag::LogMagnitude;
pub use quadrature::{
    integrate_interval, integrate_interval_with, integrate_semi_infinite,
    integrate_semi_infinite_with, QuadOptions, QuadratureResult, QuadratureStatus,
    TailCertificate,
};
pub use special::{bessel_i0_scaled, ln_bessel_i0_scaled, log_gamma};

use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("argument outside the domain of {function}: {value}")]
    Domain { function: &'static str, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("quadrature hit the depth limit without convergence ({0})")]
    MaxDepth(String),
    #[error("series truncation failed: {0}")]
    TruncationFailure(String),
}

impl QuadratureResult {
    /// Turns a non-converged result into an error carrying `context`.
    pub fn into_result(self, context: &str) -> Result<f64, NumericError> {
        match self.status {
            QuadratureStatus::Converged => Ok(self.value),
            QuadratureStatus::Divergent => Err(NumericError::Divergent(context.to_string())),
            QuadratureStatus::MaxDepth => Err(NumericError::MaxDepth(context.to_string())),
        }
    }
}
