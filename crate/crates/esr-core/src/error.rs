//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EsrError {
    #[error("invalid spin quantum number {value}: must be a non-negative half-integer")]
    InvalidSpin { value: f64 },

    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps: \
         off-diagonal residual {residual:.3e} (target {target:.3e})"
    )]
    EigenNotConverged {
        sweeps: usize,
        residual: f64,
        target: f64,
    },

    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: String, constraint: String },

    #[error(
        "mixing angle undefined at B = {b_tesla:.6e} T: \
         field exceeds the crossover B* = {crossover_tesla:.6e} T where the discriminant vanishes"
    )]
    MixingAngleDomain { b_tesla: f64, crossover_tesla: f64 },

    #[error("underdetermined fit: {points} data points for {parameters} free parameters")]
    Underdetermined { points: usize, parameters: usize },

    #[error(
        "fit did not converge after {iterations} iterations: \
         best objective {objective:.6e} (relative change target {target:.1e})"
    )]
    FitNotConverged {
        iterations: usize,
        objective: f64,
        target: f64,
    },

    #[error("mode windows overlap: {first_hz:.6e} Hz and {second_hz:.6e} Hz are closer than their synthesis windows")]
    OverlappingModes { first_hz: f64, second_hz: f64 },

    #[error("schema violation in {what}: {detail}")]
    Schema { what: String, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl EsrError {
    pub(crate) fn param(name: &str, constraint: impl Into<String>) -> Self {
        EsrError::InvalidParameter {
            name: name.to_string(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn schema(what: &str, detail: impl Into<String>) -> Self {
        EsrError::Schema {
            what: what.to_string(),
            detail: detail.into(),
        }
    }
}
