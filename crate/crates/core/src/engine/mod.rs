//! Execution engines for compiled programs.
//!
//! Both engines work on the square-root form of the joint state so that
//! strongly squeezed EPR pairs stay well conditioned.
//!
//! * [`run_analytic`] propagates the unconditional state exactly: each
//!   measurement becomes a classical register that shares the noise sources
//!   of the measured quadrature, and feedforward adds register rows.
//! * [`run_monte_carlo`] conditions on sampled outcomes. The conditional
//!   covariance does not depend on the outcomes, so every shot only updates
//!   the mean; the unconditional covariance is the conditional one plus the
//!   sample covariance of the per-shot means.

mod analytic;
mod monte_carlo;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::gaussian::{FactoredState, GaussianError, Gate, MeasurementRecord};
use crate::program::{ProgramError, Step};

pub use analytic::run_analytic;
pub use monte_carlo::{run_monte_carlo, sample_outcomes, MonteCarloPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

/// Knobs that deliberately perturb the analytic engine.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EngineOptions {
    /// Relative error applied to every QND gain.
    pub gain_error: f64,
}

/// Standard errors of Monte Carlo moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentErrors {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Moments of the output modes, in io order.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineOutput {
    pub labels: Vec<String>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub records: Vec<MeasurementRecord>,
    pub errors: Option<MomentErrors>,
}

fn index(state: &FactoredState, label: &str) -> Result<usize, EngineError> {
    state
        .mode_index(label)
        .ok_or_else(|| ProgramError::UndeclaredMode { step: usize::MAX, mode: label.to_string() }.into())
}

/// Resolves a gate step against the current mode ordering.
fn gate_for(step: &Step, state: &FactoredState, gain_scale: f64) -> Result<Option<Gate>, EngineError> {
    Ok(Some(match step {
        Step::Squeeze { a, b, r } => Gate::TwoModeSqueeze { a: index(state, a)?, b: index(state, b)?, r: *r },
        Step::Qnd { a, b, gain } => Gate::Qnd { a: index(state, a)?, b: index(state, b)?, gain: gain * gain_scale },
        Step::Phase { mode, theta } => Gate::Phase { mode: index(state, mode)?, theta: *theta },
        Step::Measure { .. } | Step::Displace { .. } => return Ok(None),
    }))
}
