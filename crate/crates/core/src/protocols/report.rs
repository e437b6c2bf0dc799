use nalgebra::{DMatrix, DVector, Matrix2};
use serde::Serialize;

use super::config::{EngineKind, ProtocolConfig};
use crate::gaussian::{GaussianState, MeasurementRecord};

pub const REPORT_SCHEMA: &str = "spinport-report/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub label: String,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Moments {
    pub fn of_state(label: &str, s: &GaussianState) -> Self {
        Self::from_parts(label, s.mean(), s.cov(), 0)
    }

    /// Moments of mode `k` of a joint mean/covariance.
    pub fn from_parts(label: &str, mean: &DVector<f64>, cov: &DMatrix<f64>, k: usize) -> Self {
        let (i, j) = (2 * k, 2 * k + 1);
        Self {
            label: label.to_string(),
            mean: [mean[i], mean[j]],
            cov: [[cov[(i, i)], cov[(i, j)]], [cov[(j, i)], cov[(j, j)]]],
        }
    }

    pub fn cov_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.cov[0][0], self.cov[0][1], self.cov[1][0], self.cov[1][1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AddedNoise {
    pub system: String,
    pub x: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EngineMeta {
    pub kind: EngineKind,
    pub shots: u64,
    pub seed: Option<u64>,
}

/// Standard errors of the Monte Carlo estimates, laid out like the values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardErrors {
    pub output_moments: Vec<Moments>,
    pub added_noise: Vec<AddedNoise>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolReport {
    pub schema: String,
    pub protocol: String,
    pub config: ProtocolConfig,
    pub engine: EngineMeta,
    pub input_moments: Vec<Moments>,
    pub output_moments: Vec<Moments>,
    /// Rows: output quadratures in io order; columns: input quadratures.
    pub gain_matrix: Vec<Vec<f64>>,
    pub added_noise: Vec<AddedNoise>,
    pub fidelity_coherent: f64,
    pub measurement_records: Vec<MeasurementRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<StandardErrors>,
    pub notes: Vec<String>,
}

impl ProtocolReport {
    pub fn gain(&self) -> DMatrix<f64> {
        let rows = self.gain_matrix.len();
        let cols = self.gain_matrix.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, cols, |i, j| self.gain_matrix[i][j])
    }

    pub fn output(&self, label: &str) -> Option<&Moments> {
        self.output_moments.iter().find(|m| m.label == label)
    }

    pub fn noise(&self, system: &str) -> Option<&AddedNoise> {
        self.added_noise.iter().find(|n| n.system == system)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
