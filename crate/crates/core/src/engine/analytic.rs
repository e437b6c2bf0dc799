use std::collections::HashMap;

use nalgebra::{DMatrix, RowDVector};

use super::{gate_for, index, EngineError, EngineOptions, EngineOutput};
use crate::gaussian::{FactoredState, GaussianError, GaussianState, MeasurementRecord, DEGENERATE_VARIANCE};
use crate::program::{Program, Step};

/// Exact unconditional moments of the output modes. Records carry the
/// expected value of each outcome.
pub fn run_analytic(program: &Program, initial: &[GaussianState], opts: EngineOptions) -> Result<EngineOutput, EngineError> {
    program.validate()?;
    let mut state = FactoredState::from_parts(initial);
    let mut registers: HashMap<&str, (f64, RowDVector<f64>)> = HashMap::new();
    let mut records = Vec::new();
    for (step_id, step) in program.steps.iter().enumerate() {
        if let Some(gate) = gate_for(step, &state, 1.0 + opts.gain_error)? {
            state.apply_gate(gate)?;
            continue;
        }
        match step {
            Step::Measure { mode, angle, id } => {
                let m = index(&state, mode)?;
                let (mu, row) = state.quadrature(m, *angle)?;
                let var = row.norm_squared();
                if !var.is_finite() || var < DEGENERATE_VARIANCE {
                    return Err(GaussianError::DegenerateConditioning(var).into());
                }
                records.push(MeasurementRecord {
                    step_id,
                    outcome_id: id.clone(),
                    mode_label: mode.clone(),
                    quadrature_angle: *angle,
                    outcome: mu,
                });
                registers.insert(id, (mu, row));
                state.remove_mode(m)?;
            }
            Step::Displace { mode, quadrature, terms, constant } => {
                let var = 2 * index(&state, mode)? + quadrature.index();
                for (id, g) in terms {
                    let (mu, row) = &registers[id.as_str()];
                    state.add_to_variable(var, g * mu, &(row * *g));
                }
                let zero = RowDVector::zeros(state.factor().ncols());
                state.add_to_variable(var, *constant, &zero);
            }
            _ => unreachable!("gates handled above"),
        }
    }
    let pairs = program.io_pairs();
    let mut rows = Vec::with_capacity(2 * pairs.len());
    let mut labels = Vec::with_capacity(pairs.len());
    for (_, out) in &pairs {
        let m = index(&state, out)?;
        rows.extend([2 * m, 2 * m + 1]);
        labels.push(out.clone());
    }
    let factor = state.factor().select_rows(rows.iter());
    let cov: DMatrix<f64> = &factor * factor.transpose();
    Ok(EngineOutput {
        labels,
        mean: state.mean().select_rows(rows.iter()),
        cov: (&cov + cov.transpose()) * 0.5,
        records,
        errors: None,
    })
}
