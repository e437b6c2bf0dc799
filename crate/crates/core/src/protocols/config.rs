use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::spin_light::StokesNorm;

/// Photons per EPR beam (`n = 2 F N` for F = 4, N = 10⁵).
pub const BEAM_PHOTONS: f64 = 8e5;
pub const ENSEMBLE_F: f64 = 4.0;
pub const ENSEMBLE_ATOMS: f64 = 1e5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    #[default]
    Analytic,
    MonteCarlo,
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(EngineKind::Analytic),
            "monte_carlo" | "mc" => Ok(EngineKind::MonteCarlo),
            other => Err(format!("unknown engine `{other}` (expected analytic or monte_carlo)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    /// Parametric gain of the EPR source.
    pub r: f64,
    /// Spin-light QND gain; 1 is the unity-coupling point.
    pub kappa: f64,
    /// Photon ratio of the coherent readout pulse to an EPR beam.
    pub readout_ratio: f64,
    /// Overrides for the feedforward gains `ff1, ff2, ...`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedforward_gains: Option<Vec<f64>>,
    pub engine: EngineKind,
    pub shots: u64,
    pub seed: Option<u64>,
    pub stokes_norm: StokesNorm,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            r: 0.0,
            kappa: 1.0,
            readout_ratio: 1e6,
            feedforward_gains: None,
            engine: EngineKind::Analytic,
            shots: 1,
            seed: None,
            stokes_norm: StokesNorm::Canonical,
        }
    }
}

impl ProtocolConfig {
    pub fn with_r(r: f64) -> Self {
        Self { r, ..Self::default() }
    }

    pub fn monte_carlo(mut self, shots: u64, seed: u64) -> Self {
        self.engine = EngineKind::MonteCarlo;
        self.shots = shots;
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |msg: String| Err(ProtocolError::InvalidConfig(msg));
        if !self.r.is_finite() {
            return bad(format!("r must be finite, got {}", self.r));
        }
        if !self.kappa.is_finite() {
            return bad(format!("kappa must be finite, got {}", self.kappa));
        }
        if !(self.readout_ratio.is_finite() && self.readout_ratio > 0.0) {
            return bad(format!("readout_ratio must be positive, got {}", self.readout_ratio));
        }
        if let Some(g) = &self.feedforward_gains {
            if g.iter().any(|v| !v.is_finite()) {
                return bad("feedforward gains must be finite".into());
            }
        }
        if self.engine == EngineKind::MonteCarlo {
            if self.shots == 0 {
                return bad("monte_carlo needs at least one shot".into());
            }
            if self.seed.is_none() {
                return Err(ProtocolError::SeedRequired);
            }
        }
        Ok(())
    }

    /// Script variables shared by every protocol: `r`, `k`, `ratio`,
    /// `k_probe`, `g_probe`, `n_probe`, plus `ff1..` when gains are given.
    pub fn bindings(&self) -> BTreeMap<String, f64> {
        let k = self.kappa * self.stokes_norm.gain_factor();
        let root = self.readout_ratio.sqrt();
        let mut b: BTreeMap<String, f64> = [
            ("r", self.r),
            ("k", k),
            ("ratio", self.readout_ratio),
            ("k_probe", k * root),
            ("g_probe", 1.0 / root),
            ("n_probe", self.readout_ratio * BEAM_PHOTONS),
        ]
        .into_iter()
        .map(|(n, v)| (n.to_string(), v))
        .collect();
        if let Some(gains) = &self.feedforward_gains {
            for (i, g) in gains.iter().enumerate() {
                b.insert(format!("ff{}", i + 1), *g);
            }
        }
        b
    }
}
