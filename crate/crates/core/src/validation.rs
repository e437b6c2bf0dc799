//! Cross-checks of the analytic engine against the operator oracle and the
//! Monte Carlo engine.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::engine::{run_analytic, run_monte_carlo, EngineOptions, EngineOutput};
use crate::gaussian::GaussianState;
use crate::oracle::propagate;
use crate::program::Program;
use crate::protocols::{ProtocolConfig, ProtocolError, ProtocolKind};

/// Oracle and analytic moments must agree to this absolute tolerance.
pub const ORACLE_TOL: f64 = 1e-10;
/// Monte Carlo estimates must lie within this many standard errors.
pub const MC_SIGMAS: f64 = 5.0;
/// Commutators of the final operators must be canonical to this tolerance.
pub const COMMUTATOR_TOL: f64 = 1e-12;

pub const DEFAULT_R: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
pub const DEFAULT_RATIOS: [f64; 3] = [1e2, 1e4, 1e6];

/// One grid point of `validate`.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationRow {
    pub protocol: String,
    pub r: f64,
    pub readout_ratio: f64,
    /// Largest |oracle − analytic| over output means, covariances and gains.
    pub oracle_deviation: f64,
    pub commutator_defect: f64,
    /// Largest |MC − analytic| in units of the MC standard error.
    pub mc_sigmas: f64,
    /// Largest added noise beyond the EPR term `e^{-2r}`, from the oracle.
    pub residual_noise: f64,
    pub pass: bool,
}

/// Largest deviation between two moment sets, measured in standard errors.
/// Entries whose standard error vanishes must agree to [`ORACLE_TOL`].
pub fn sigma_distance(mc: &EngineOutput, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let Some(se) = &mc.errors else { return f64::INFINITY };
    let pairs = mc
        .mean
        .iter()
        .zip(mean.iter())
        .zip(se.mean.iter())
        .chain(mc.cov.iter().zip(cov.iter()).zip(se.cov.iter()));
    pairs.fold(0.0f64, |worst, ((a, b), s)| {
        let d = (a - b).abs();
        let z = if *s > 0.0 { d / s } else if d <= ORACLE_TOL { 0.0 } else { f64::INFINITY };
        worst.max(z)
    })
}

fn input_cov(program: &Program, initial: &[GaussianState]) -> DMatrix<f64> {
    let pairs = program.io_pairs();
    let mut sigma = DMatrix::zeros(2 * pairs.len(), 2 * pairs.len());
    for (k, (input, _)) in pairs.iter().enumerate() {
        let idx = program.modes.iter().position(|m| m.label == *input).expect("validated io");
        sigma.view_mut((2 * k, 2 * k), (2, 2)).copy_from(initial[idx].cov());
    }
    sigma
}

/// Runs the three engines on one configuration. Inputs are the declared
/// states (vacuum for ensembles).
pub fn validate_point(
    kind: ProtocolKind,
    cfg: &ProtocolConfig,
    shots: u64,
    seed: u64,
    opts: EngineOptions,
) -> Result<ValidationRow, ProtocolError> {
    let program = kind.program(cfg)?;
    let initial = program.initial_states(&[])?;
    let analytic = run_analytic(&program, &initial, opts).map_err(ProtocolError::from)?;
    let table = propagate(&program).map_err(|e| ProtocolError::InvalidConfig(e.to_string()))?;
    let (o_mean, o_cov) = table.output_moments(&program, &initial);
    let o_gain = table.gain_matrix(&program);

    let analytic_gain = {
        let mut cfg = cfg.clone();
        cfg.engine = crate::protocols::EngineKind::Analytic;
        crate::protocols::run_program(&program, &cfg, &[], opts)?.gain()
    };
    let oracle_deviation = (&o_mean - &analytic.mean)
        .amax()
        .max((&o_cov - &analytic.cov).amax())
        .max((&o_gain - &analytic_gain).amax());

    let mc = run_monte_carlo(&program, &initial, shots, seed).map_err(ProtocolError::from)?;
    let mc_sigmas = sigma_distance(&mc, &analytic.mean, &analytic.cov);

    let noise = &o_cov - &o_gain * input_cov(&program, &initial) * o_gain.transpose();
    let epr = (-2.0 * cfg.r).exp();
    let residual_noise = noise.diagonal().iter().fold(f64::NEG_INFINITY, |m, n| m.max(n - epr));

    let commutator_defect = table.commutator_defect();
    let pass = oracle_deviation <= ORACLE_TOL && mc_sigmas <= MC_SIGMAS && commutator_defect <= COMMUTATOR_TOL;
    Ok(ValidationRow {
        protocol: kind.name().to_string(),
        r: cfg.r,
        readout_ratio: cfg.readout_ratio,
        oracle_deviation,
        commutator_defect,
        mc_sigmas,
        residual_noise,
        pass,
    })
}
