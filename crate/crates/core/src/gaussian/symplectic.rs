use nalgebra::{DMatrix, DVector};

use super::{GaussianError, SYMMETRY_TOL};

/// The symplectic form with 2x2 blocks `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * num_modes, 2 * num_modes);
    for k in 0..num_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Affine phase-space map `v -> S v + d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticTransform {
    pub matrix: DMatrix<f64>,
    pub displacement: DVector<f64>,
}

impl SymplecticTransform {
    pub fn identity(num_modes: usize) -> Self {
        Self::linear(DMatrix::identity(2 * num_modes, 2 * num_modes))
    }

    pub fn linear(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        Self { matrix, displacement: DVector::zeros(n) }
    }

    pub fn displacement(num_modes: usize, mode: usize, dx: f64, dp: f64) -> Result<Self, GaussianError> {
        if mode >= num_modes {
            return Err(GaussianError::ModeOutOfRange { mode, num_modes });
        }
        let mut t = Self::identity(num_modes);
        t.displacement[2 * mode] = dx;
        t.displacement[2 * mode + 1] = dp;
        Ok(t)
    }

    pub fn num_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SymplecticTransform) -> Result<Self, GaussianError> {
        if self.matrix.ncols() != first.matrix.nrows() {
            return Err(GaussianError::Dimension(format!(
                "cannot compose {} and {} dimensional maps",
                self.matrix.ncols(),
                first.matrix.nrows()
            )));
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
            displacement: &self.matrix * &first.displacement + &self.displacement,
        })
    }

    /// Largest entry of `|S Ω Sᵀ - Ω|`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.num_modes());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    pub fn is_symplectic(&self) -> bool {
        self.matrix.is_square() && self.matrix.nrows().is_multiple_of(2) && self.symplectic_defect() <= SYMMETRY_TOL
    }
}
