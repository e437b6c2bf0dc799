use nalgebra::{DMatrix, DVector, RowDVector, SymmetricEigen};

use super::gate::{cos_sin, Gate};
use super::state::symmetrize;
use super::{GaussianError, GaussianState, DEGENERATE_VARIANCE};

/// Square-root form of a Gaussian state: `cov = F Fᵀ`.
///
/// Rows of `F` are phase-space variables, columns are independent unit noise
/// sources. Gates act on rows only, so large squeezing cancels at the level
/// of the factor entries instead of the (quadratically larger) covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredState {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    labels: Vec<String>,
}

/// Outcome-independent part of a homodyne update.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditioning {
    /// Weights of `(x, p)` in the measured quadrature.
    pub weights: (f64, f64),
    /// Standard deviation of the outcome.
    pub sigma: f64,
    /// `Cov(v, q) / Var(q)` for every variable before the mode is removed.
    pub gain: DVector<f64>,
}

fn matrix_sqrt_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(cov.clone()));
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals)
}

impl FactoredState {
    /// Block-diagonal product of the given states.
    pub fn from_parts(parts: &[GaussianState]) -> Self {
        let n: usize = parts.iter().map(|s| s.mean().len()).sum();
        let mut mean = DVector::zeros(n);
        let mut factor = DMatrix::zeros(n, n);
        let mut labels = Vec::new();
        let mut off = 0;
        for s in parts {
            let k = s.mean().len();
            mean.rows_mut(off, k).copy_from(s.mean());
            factor.view_mut((off, off), (k, k)).copy_from(&matrix_sqrt_factor(s.cov()));
            labels.extend(s.labels().iter().cloned());
            off += k;
        }
        Self { mean, factor, labels }
    }

    pub fn num_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cov(&self) -> DMatrix<f64> {
        symmetrize(&self.factor * self.factor.transpose())
    }

    pub fn to_state(&self) -> GaussianState {
        GaussianState::new(self.mean.clone(), self.cov())
            .and_then(|s| s.with_labels(self.labels.clone()))
            .unwrap_or_else(|e| panic!("factored state lost physicality: {e}"))
    }

    fn check_mode(&self, mode: usize) -> Result<(), GaussianError> {
        if mode >= self.num_modes() {
            Err(GaussianError::ModeOutOfRange { mode, num_modes: self.num_modes() })
        } else {
            Ok(())
        }
    }

    pub fn apply_gate(&mut self, gate: Gate) -> Result<(), GaussianError> {
        gate.check(self.num_modes())?;
        gate.apply_to_vector(self.mean.as_mut_slice());
        gate.apply_to_rows(&mut self.factor);
        Ok(())
    }

    pub fn displace(&mut self, mode: usize, dx: f64, dp: f64) -> Result<(), GaussianError> {
        self.check_mode(mode)?;
        self.mean[2 * mode] += dx;
        self.mean[2 * mode + 1] += dp;
        Ok(())
    }

    /// Mean and factor row of `x cos(angle) + p sin(angle)`.
    pub fn quadrature(&self, mode: usize, angle: f64) -> Result<(f64, RowDVector<f64>), GaussianError> {
        self.check_mode(mode)?;
        let (c, s) = cos_sin(angle);
        let row = self.factor.row(2 * mode) * c + self.factor.row(2 * mode + 1) * s;
        Ok((c * self.mean[2 * mode] + s * self.mean[2 * mode + 1], row))
    }

    /// Adds `mean_shift + row` to phase-space variable `var`; used for
    /// feedforward from classical registers that share the noise sources.
    pub fn add_to_variable(&mut self, var: usize, mean_shift: f64, row: &RowDVector<f64>) {
        self.mean[var] += mean_shift;
        let updated = self.factor.row(var) + row;
        self.factor.set_row(var, &updated);
    }

    pub fn remove_mode(&mut self, mode: usize) -> Result<(), GaussianError> {
        self.check_mode(mode)?;
        self.mean = self.mean.clone().remove_rows(2 * mode, 2);
        self.factor = self.factor.clone().remove_rows(2 * mode, 2);
        self.labels.remove(mode);
        Ok(())
    }

    /// Conditions on a homodyne outcome and removes the mode. The factor is
    /// projected off the measured direction; the mean is left unchanged
    /// because the update is linear in the outcome (see [`Conditioning`]).
    pub fn condition(&mut self, mode: usize, angle: f64) -> Result<Conditioning, GaussianError> {
        let (_, h) = self.quadrature(mode, angle)?;
        let var = h.norm_squared();
        if !var.is_finite() || var < DEGENERATE_VARIANCE {
            return Err(GaussianError::DegenerateConditioning(var));
        }
        let gain = &self.factor * h.transpose() / var;
        self.factor -= &gain * &h;
        self.remove_mode(mode)?;
        Ok(Conditioning { weights: cos_sin(angle), sigma: var.sqrt(), gain })
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}
