use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Matrix2, Matrix4};

use super::{GaussianError, SymplecticTransform};

/// Elementary phase-space gates acting on one or two modes.
///
/// Mode indices refer to the interleaved ordering `(x0, p0, x1, p1, ...)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    /// `(x, p) -> (x cos t + p sin t, -x sin t + p cos t)`.
    Phase { mode: usize, theta: f64 },
    /// Two-mode squeezer; on vacuum it squeezes `x_a + x_b` and `p_a - p_b`.
    TwoModeSqueeze { a: usize, b: usize, r: f64 },
    /// Quantum non-demolition coupling: `p_a += g x_b`, `p_b += g x_a`.
    Qnd { a: usize, b: usize, gain: f64 },
}

/// `cos` and `sin` with exact values at integer multiples of pi/2.
pub fn cos_sin(theta: f64) -> (f64, f64) {
    let quarter = theta / FRAC_PI_2;
    let nearest = quarter.round();
    if (quarter - nearest).abs() < 1e-12 {
        match (nearest as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        (theta.cos(), theta.sin())
    }
}

enum Local {
    One(usize, Matrix2<f64>),
    Two(usize, usize, Matrix4<f64>),
}

impl Gate {
    pub fn modes(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Phase { mode, .. } => (mode, None),
            Gate::TwoModeSqueeze { a, b, .. } | Gate::Qnd { a, b, .. } => (a, Some(b)),
        }
    }

    pub fn check(&self, num_modes: usize) -> Result<(), GaussianError> {
        let (a, b) = self.modes();
        for m in std::iter::once(a).chain(b) {
            if m >= num_modes {
                return Err(GaussianError::ModeOutOfRange { mode: m, num_modes });
            }
        }
        if b == Some(a) {
            return Err(GaussianError::SameMode(a));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Phase { mode, theta } => Gate::Phase { mode, theta: -theta },
            Gate::TwoModeSqueeze { a, b, r } => Gate::TwoModeSqueeze { a, b, r: -r },
            Gate::Qnd { a, b, gain } => Gate::Qnd { a, b, gain: -gain },
        }
    }

    fn local(&self) -> Local {
        match *self {
            Gate::Phase { mode, theta } => {
                let (c, s) = cos_sin(theta);
                Local::One(mode, Matrix2::new(c, s, -s, c))
            }
            Gate::TwoModeSqueeze { a, b, r } => {
                let (c, s) = (r.cosh(), r.sinh());
                #[rustfmt::skip]
                let m = Matrix4::new(
                    c, 0.0, -s, 0.0,
                    0.0, c, 0.0, s,
                    -s, 0.0, c, 0.0,
                    0.0, s, 0.0, c,
                );
                Local::Two(a, b, m)
            }
            Gate::Qnd { a, b, gain } => {
                #[rustfmt::skip]
                let m = Matrix4::new(
                    1.0, 0.0, 0.0, 0.0,
                    0.0, 1.0, gain, 0.0,
                    0.0, 0.0, 1.0, 0.0,
                    gain, 0.0, 0.0, 1.0,
                );
                Local::Two(a, b, m)
            }
        }
    }

    /// Full `2M x 2M` symplectic matrix of this gate.
    pub fn symplectic(&self, num_modes: usize) -> Result<SymplecticTransform, GaussianError> {
        self.check(num_modes)?;
        let mut matrix = DMatrix::identity(2 * num_modes, 2 * num_modes);
        self.apply_to_rows(&mut matrix);
        Ok(SymplecticTransform::linear(matrix))
    }

    /// Transforms a phase-space vector in place.
    pub fn apply_to_vector(&self, v: &mut [f64]) {
        match self.local() {
            Local::One(m, l) => {
                let (x, p) = (v[2 * m], v[2 * m + 1]);
                v[2 * m] = l[(0, 0)] * x + l[(0, 1)] * p;
                v[2 * m + 1] = l[(1, 0)] * x + l[(1, 1)] * p;
            }
            Local::Two(a, b, l) => {
                let idx = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1];
                let old = idx.map(|i| v[i]);
                for (r, &i) in idx.iter().enumerate() {
                    v[i] = (0..4).map(|c| l[(r, c)] * old[c]).sum();
                }
            }
        }
    }

    /// Left-multiplies the rows belonging to the gate's modes by the local
    /// matrix. Rows are phase-space variables, columns are arbitrary.
    pub fn apply_to_rows(&self, m: &mut DMatrix<f64>) {
        let (idx, local): (Vec<usize>, DMatrix<f64>) = match self.local() {
            Local::One(k, l) => (vec![2 * k, 2 * k + 1], DMatrix::from_iterator(2, 2, l.iter().copied())),
            Local::Two(a, b, l) => (
                vec![2 * a, 2 * a + 1, 2 * b, 2 * b + 1],
                DMatrix::from_iterator(4, 4, l.iter().copied()),
            ),
        };
        let old = m.select_rows(idx.iter());
        let new = local * old;
        for (r, &i) in idx.iter().enumerate() {
            m.set_row(i, &new.row(r));
        }
    }
}
