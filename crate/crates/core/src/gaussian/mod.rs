//! Gaussian phase-space states and the operations the protocols need.
//!
//! Convention: interleaved ordering `(x1, p1, x2, p2, ...)`, `[x, p] = i`,
//! vacuum variance 1/2 per quadrature.

mod factored;
mod gate;
mod state;
mod symplectic;

use serde::Serialize;
use thiserror::Error;

pub use factored::{Conditioning, FactoredState};
pub use gate::{cos_sin, Gate};
pub(crate) use state::single_mode_fidelity;
pub use state::{gaussian_fidelity, symplectic_spectrum, GaussianState, Outcome};
pub use symplectic::{symplectic_form, SymplecticTransform};

pub const VACUUM_VARIANCE: f64 = 0.5;
/// Symmetry and symplecticity tolerance.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Slack below 1/2 allowed for symplectic eigenvalues.
pub const EIGEN_SLACK: f64 = 1e-9;
/// Marginal variances below this cannot be conditioned on.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("mode {mode} out of range for a {num_modes}-mode state")]
    ModeOutOfRange { mode: usize, num_modes: usize },
    #[error("two-mode operation needs distinct modes, got mode {0} twice")]
    SameMode(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("covariance matrix is not symmetric (asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("state has non-finite entries")]
    NonFinite,
    #[error("covariance violates the uncertainty principle (symplectic eigenvalue {0})")]
    Unphysical(f64),
    #[error("marginal variance {0:e} is zero or not finite; cannot condition on it")]
    DegenerateConditioning(f64),
    #[error("fidelity needs single-mode states, got {0} modes")]
    NotSingleMode(usize),
}

/// One destructive homodyne detection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub step_id: usize,
    pub outcome_id: String,
    pub mode_label: String,
    pub quadrature_angle: f64,
    pub outcome: f64,
}

#[cfg(test)]
mod tests;
