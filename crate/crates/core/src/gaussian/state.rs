use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::gate::{cos_sin, Gate};
use super::symplectic::symplectic_form;
use super::{GaussianError, SymplecticTransform, DEGENERATE_VARIANCE, EIGEN_SLACK, SYMMETRY_TOL, VACUUM_VARIANCE};

/// Where a homodyne outcome comes from.
pub enum Outcome<'a> {
    /// Draw from the marginal distribution of the measured quadrature.
    Sample(&'a mut dyn RngCore),
    /// Condition on a given value.
    Fixed(f64),
}

/// Gaussian state of `M` bosonic modes: mean vector and covariance matrix in
/// the interleaved ordering `(x1, p1, ..., xM, pM)`, vacuum variance 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    labels: Vec<String>,
}

fn default_labels(num_modes: usize) -> Vec<String> {
    (0..num_modes).map(|i| format!("mode{i}")).collect()
}

impl GaussianState {
    pub fn vacuum(num_modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * num_modes),
            cov: DMatrix::identity(2 * num_modes, 2 * num_modes) * VACUUM_VARIANCE,
            labels: default_labels(num_modes),
        }
    }

    /// Single-mode coherent state with quadrature means `(x, p)`.
    pub fn coherent(x: f64, p: f64) -> Self {
        let mut s = Self::vacuum(1);
        s.mean[0] = x;
        s.mean[1] = p;
        s
    }

    /// Validated constructor.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, GaussianError> {
        if !mean.len().is_multiple_of(2) || cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(GaussianError::Dimension(format!(
                "mean of length {} with {}x{} covariance",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let labels = default_labels(mean.len() / 2);
        let state = Self { mean, cov, labels };
        state.validate()?;
        Ok(state)
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Result<Self, GaussianError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.num_modes() {
            return Err(GaussianError::Dimension(format!(
                "{} labels for {} modes",
                labels.len(),
                self.num_modes()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn num_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Checks symmetry, finiteness and the uncertainty principle.
    pub fn validate(&self) -> Result<(), GaussianError> {
        if self.mean.iter().chain(self.cov.iter()).any(|v| !v.is_finite()) {
            return Err(GaussianError::NonFinite);
        }
        let nu = self.symplectic_eigenvalues()?;
        if let Some(&min) = nu.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < VACUUM_VARIANCE - EIGEN_SLACK {
                return Err(GaussianError::Unphysical(min));
            }
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<(), GaussianError> {
        if mode >= self.num_modes() {
            Err(GaussianError::ModeOutOfRange { mode, num_modes: self.num_modes() })
        } else {
            Ok(())
        }
    }

    /// Product state `self ⊗ other`; labels are concatenated.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (n1, n2) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(n1 + n2);
        mean.rows_mut(0, n1).copy_from(&self.mean);
        mean.rows_mut(n1, n2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(n1 + n2, n1 + n2);
        cov.view_mut((0, 0), (n1, n1)).copy_from(&self.cov);
        cov.view_mut((n1, n1), (n2, n2)).copy_from(&other.cov);
        let labels = self.labels.iter().chain(&other.labels).cloned().collect();
        GaussianState { mean, cov, labels }
    }

    pub fn apply(&self, t: &SymplecticTransform) -> Result<GaussianState, GaussianError> {
        if t.matrix.nrows() != self.mean.len() || t.matrix.ncols() != self.mean.len() {
            return Err(GaussianError::Dimension(format!(
                "{}x{} transform on a {}-mode state",
                t.matrix.nrows(),
                t.matrix.ncols(),
                self.num_modes()
            )));
        }
        let cov = &t.matrix * &self.cov * t.matrix.transpose();
        Ok(GaussianState {
            mean: &t.matrix * &self.mean + &t.displacement,
            cov: symmetrize(cov),
            labels: self.labels.clone(),
        })
    }

    pub fn apply_gate(&self, gate: Gate) -> Result<GaussianState, GaussianError> {
        gate.check(self.num_modes())?;
        let mut next = self.clone();
        gate.apply_to_vector(next.mean.as_mut_slice());
        gate.apply_to_rows(&mut next.cov);
        let mut t = next.cov.transpose();
        gate.apply_to_rows(&mut t);
        next.cov = symmetrize(t);
        Ok(next)
    }

    pub fn displace(&self, mode: usize, dx: f64, dp: f64) -> Result<GaussianState, GaussianError> {
        self.check_mode(mode)?;
        let mut next = self.clone();
        next.mean[2 * mode] += dx;
        next.mean[2 * mode + 1] += dp;
        Ok(next)
    }

    pub fn phase_shift(&self, mode: usize, theta: f64) -> Result<GaussianState, GaussianError> {
        self.apply_gate(Gate::Phase { mode, theta })
    }

    pub fn two_mode_squeeze(&self, i: usize, j: usize, r: f64) -> Result<GaussianState, GaussianError> {
        self.apply_gate(Gate::TwoModeSqueeze { a: i, b: j, r })
    }

    pub fn qnd_gate(&self, i: usize, j: usize, gain: f64) -> Result<GaussianState, GaussianError> {
        self.apply_gate(Gate::Qnd { a: i, b: j, gain })
    }

    /// Variance of the linear combination `w · (x1, p1, ...)`.
    pub fn variance_of(&self, weights: &DVector<f64>) -> f64 {
        (weights.transpose() * &self.cov * weights)[(0, 0)]
    }

    /// Destructive homodyne detection of `x cos(angle) + p sin(angle)` on
    /// `mode`. The posterior is the conditional Gaussian of the remaining
    /// modes.
    pub fn homodyne_measure(
        &self,
        mode: usize,
        angle: f64,
        source: Outcome<'_>,
    ) -> Result<(f64, GaussianState), GaussianError> {
        self.check_mode(mode)?;
        let (c, s) = cos_sin(angle);
        let n = self.mean.len();
        let mut h = DVector::zeros(n);
        h[2 * mode] = c;
        h[2 * mode + 1] = s;
        let cross = &self.cov * &h;
        let var = h.dot(&cross);
        if !var.is_finite() || var < DEGENERATE_VARIANCE {
            return Err(GaussianError::DegenerateConditioning(var));
        }
        let marginal_mean = h.dot(&self.mean);
        let outcome = match source {
            Outcome::Fixed(v) => v,
            Outcome::Sample(rng) => {
                let z: f64 = StandardNormal.sample(rng);
                marginal_mean + var.sqrt() * z
            }
        };
        let mean = &self.mean + &cross * ((outcome - marginal_mean) / var);
        let cov = &self.cov - &cross * cross.transpose() / var;
        let keep: Vec<usize> = (0..self.num_modes()).filter(|&k| k != mode).collect();
        let full = GaussianState { mean, cov: symmetrize(cov), labels: self.labels.clone() };
        Ok((outcome, full.restrict(&keep)))
    }

    fn restrict(&self, keep: &[usize]) -> GaussianState {
        let idx: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        GaussianState {
            mean: self.mean.select_rows(idx.iter()),
            cov: self.cov.select_rows(idx.iter()).select_columns(idx.iter()),
            labels: keep.iter().map(|&k| self.labels[k].clone()).collect(),
        }
    }

    /// Reduced state of the modes in `keep`, in the given order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<GaussianState, GaussianError> {
        for &k in keep {
            self.check_mode(k)?;
        }
        Ok(self.restrict(keep))
    }

    /// Mean `(x, p)` and 2x2 covariance block of one mode.
    pub fn mode_moments(&self, mode: usize) -> Result<([f64; 2], [[f64; 2]; 2]), GaussianError> {
        self.check_mode(mode)?;
        let (i, j) = (2 * mode, 2 * mode + 1);
        Ok((
            [self.mean[i], self.mean[j]],
            [[self.cov[(i, i)], self.cov[(i, j)]], [self.cov[(j, i)], self.cov[(j, j)]]],
        ))
    }

    /// Symplectic spectrum, ascending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>, GaussianError> {
        symplectic_spectrum(&self.cov)
    }
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Symplectic eigenvalues from the singular values of `V^½ Ω V^½`.
pub fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>, GaussianError> {
    if !cov.is_square() || !cov.nrows().is_multiple_of(2) {
        return Err(GaussianError::Dimension(format!("{}x{} covariance", cov.nrows(), cov.ncols())));
    }
    let asym = max_asymmetry(cov);
    if asym > SYMMETRY_TOL {
        return Err(GaussianError::Asymmetric(asym));
    }
    let n = cov.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eig = SymmetricEigen::new(symmetrize(cov.clone()));
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let a = &root * symplectic_form(n / 2) * &root;
    let b = symmetrize(a.transpose() * a);
    let mut sq: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    sq.sort_by(|x, y| x.total_cmp(y));
    Ok(sq.chunks(2).map(|pair| (0.5 * (pair[0] + pair[1])).sqrt()).collect())
}

/// Fidelity `F = Tr(ρσ)`-type overlap between two single-mode Gaussian
/// states (equal to `|<ψ|φ>|²` for pure states).
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64, GaussianError> {
    for s in [a, b] {
        if s.num_modes() != 1 {
            return Err(GaussianError::NotSingleMode(s.num_modes()));
        }
    }
    let va = Matrix2::new(a.cov[(0, 0)], a.cov[(0, 1)], a.cov[(1, 0)], a.cov[(1, 1)]);
    let vb = Matrix2::new(b.cov[(0, 0)], b.cov[(0, 1)], b.cov[(1, 0)], b.cov[(1, 1)]);
    Ok(single_mode_fidelity(&va, &vb, [b.mean[0] - a.mean[0], b.mean[1] - a.mean[1]]))
}

pub(crate) fn single_mode_fidelity(va: &Matrix2<f64>, vb: &Matrix2<f64>, d: [f64; 2]) -> f64 {
    let sum = va + vb;
    let det_sum = sum.determinant();
    let delta = (4.0 * va.determinant() - 1.0).max(0.0) * (4.0 * vb.determinant() - 1.0).max(0.0) / 4.0;
    let inv = sum.try_inverse().unwrap_or_else(Matrix2::zeros);
    let dv = nalgebra::Vector2::new(d[0], d[1]);
    let exponent = -0.5 * dv.dot(&(inv * dv));
    let f = exponent.exp() / ((det_sum + delta).sqrt() - delta.sqrt());
    f.clamp(0.0, 1.0)
}
