use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{gate_for, index, EngineError, EngineOutput, MomentErrors};
use crate::gaussian::{FactoredState, Gate, GaussianState, MeasurementRecord};
use crate::program::{Program, Step};

#[derive(Clone, Debug, PartialEq)]
enum PlanOp {
    Gate(Gate),
    Measure { mode: usize, weights: (f64, f64), sigma: f64, gain: DVector<f64> },
    /// `terms` index into the outcome list.
    Displace { var: usize, terms: Vec<(usize, f64)>, constant: f64 },
}

/// Outcome-independent part of a Monte Carlo run: gates, conditioning gains
/// and the final conditional covariance of the outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloPlan {
    initial_mean: DVector<f64>,
    ops: Vec<PlanOp>,
    outputs: Vec<usize>,
    labels: Vec<String>,
    conditional_cov: DMatrix<f64>,
    measurements: Vec<(usize, String, String, f64)>,
}

impl MonteCarloPlan {
    pub fn build(program: &Program, initial: &[GaussianState]) -> Result<Self, EngineError> {
        program.validate()?;
        let mut state = FactoredState::from_parts(initial);
        let initial_mean = state.mean().clone();
        let mut ops = Vec::with_capacity(program.steps.len());
        let mut measurements = Vec::new();
        for (step_id, step) in program.steps.iter().enumerate() {
            if let Some(gate) = gate_for(step, &state, 1.0)? {
                state.apply_gate(gate)?;
                ops.push(PlanOp::Gate(gate));
                continue;
            }
            match step {
                Step::Measure { mode, angle, id } => {
                    let m = index(&state, mode)?;
                    let c = state.condition(m, *angle)?;
                    ops.push(PlanOp::Measure { mode: m, weights: c.weights, sigma: c.sigma, gain: c.gain });
                    measurements.push((step_id, id.clone(), mode.clone(), *angle));
                }
                Step::Displace { mode, quadrature, terms, constant } => {
                    let var = 2 * index(&state, mode)? + quadrature.index();
                    let terms = terms
                        .iter()
                        .map(|(id, g)| (measurements.iter().position(|m| m.1 == *id).expect("validated outcome"), *g))
                        .collect();
                    ops.push(PlanOp::Displace { var, terms, constant: *constant });
                }
                _ => unreachable!("gates handled above"),
            }
        }
        let mut outputs = Vec::new();
        let mut labels = Vec::new();
        for (_, out) in program.io_pairs() {
            let m = index(&state, &out)?;
            outputs.extend([2 * m, 2 * m + 1]);
            labels.push(out);
        }
        let factor = state.factor().select_rows(outputs.iter());
        let cov = &factor * factor.transpose();
        Ok(Self {
            initial_mean,
            ops,
            outputs,
            labels,
            conditional_cov: (&cov + cov.transpose()) * 0.5,
            measurements,
        })
    }

    /// Output means of one trajectory; `noise` supplies standard normal
    /// deviates for the outcomes, which are written to `outcomes`.
    pub fn propagate(&self, initial_mean: &DVector<f64>, outcomes: &mut Vec<f64>, mut noise: impl FnMut() -> f64) -> Vec<f64> {
        let mut mean: Vec<f64> = initial_mean.iter().copied().collect();
        outcomes.clear();
        for op in &self.ops {
            match op {
                PlanOp::Gate(g) => g.apply_to_vector(&mut mean),
                PlanOp::Measure { mode, weights: (c, s), sigma, gain } => {
                    let mu = c * mean[2 * mode] + s * mean[2 * mode + 1];
                    let outcome = mu + sigma * noise();
                    let shift = outcome - mu;
                    for (m, g) in mean.iter_mut().zip(gain.iter()) {
                        *m += g * shift;
                    }
                    mean.drain(2 * mode..2 * mode + 2);
                    outcomes.push(outcome);
                }
                PlanOp::Displace { var, terms, constant } => {
                    mean[*var] += terms.iter().map(|&(k, g)| g * outcomes[k]).sum::<f64>() + constant;
                }
            }
        }
        self.outputs.iter().map(|&i| mean[i]).collect()
    }

    /// Output means when every outcome equals its conditional expectation.
    pub fn expected_output(&self, initial: &[GaussianState]) -> DVector<f64> {
        let mean = DVector::from_iterator(
            self.initial_mean.len(),
            initial.iter().flat_map(|s| s.mean().iter().copied().collect::<Vec<_>>()),
        );
        DVector::from_vec(self.propagate(&mean, &mut Vec::new(), || 0.0))
    }

    pub fn conditional_cov(&self) -> &DMatrix<f64> {
        &self.conditional_cov
    }
}

fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Raw measurement outcomes of `shots` trajectories, in measurement order.
/// Uses the same per-shot streams as [`run_monte_carlo`].
pub fn sample_outcomes(program: &Program, initial: &[GaussianState], shots: u64, seed: u64) -> Result<Vec<Vec<f64>>, EngineError> {
    let plan = MonteCarloPlan::build(program, initial)?;
    Ok((0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = shot_rng(seed, shot);
            let mut outcomes = Vec::new();
            plan.propagate(&plan.initial_mean, &mut outcomes, || rng.sample(StandardNormal));
            outcomes
        })
        .collect())
}

/// Sampled trajectories with outcome-dependent feedforward. Shot `i` draws
/// from the ChaCha stream `i` of `seed`, so results do not depend on the
/// thread schedule. Records come from shot 0.
pub fn run_monte_carlo(program: &Program, initial: &[GaussianState], shots: u64, seed: u64) -> Result<EngineOutput, EngineError> {
    let plan = MonteCarloPlan::build(program, initial)?;
    let shots = shots.max(1);
    let trajectories: Vec<Vec<f64>> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = shot_rng(seed, shot);
            plan.propagate(&plan.initial_mean, &mut Vec::new(), || rng.sample(StandardNormal))
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut rng = shot_rng(seed, 0);
    plan.propagate(&plan.initial_mean, &mut outcomes, || rng.sample(StandardNormal));
    let records = plan
        .measurements
        .iter()
        .zip(outcomes)
        .map(|((step_id, id, label, angle), outcome)| MeasurementRecord {
            step_id: *step_id,
            outcome_id: id.clone(),
            mode_label: label.clone(),
            quadrature_angle: *angle,
            outcome,
        })
        .collect();

    let dim = plan.outputs.len();
    let n = shots as f64;
    let mut mean = DVector::zeros(dim);
    for t in &trajectories {
        mean += DVector::from_column_slice(t);
    }
    mean /= n;
    let mut scatter = DMatrix::zeros(dim, dim);
    for t in &trajectories {
        let d = DVector::from_column_slice(t) - &mean;
        scatter += &d * d.transpose();
    }
    let (cov, errors) = if shots > 1 {
        let s = scatter / (n - 1.0);
        let mean_se = DVector::from_fn(dim, |i, _| (s[(i, i)] / n).sqrt());
        let cov_se = DMatrix::from_fn(dim, dim, |i, j| ((s[(i, i)] * s[(j, j)] + s[(i, j)].powi(2)) / (n - 1.0)).sqrt());
        (&plan.conditional_cov + s, Some(MomentErrors { mean: mean_se, cov: cov_se }))
    } else {
        (plan.conditional_cov.clone(), None)
    };
    Ok(EngineOutput { labels: plan.labels.clone(), mean, cov, records, errors })
}
