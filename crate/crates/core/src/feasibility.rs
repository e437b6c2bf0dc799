//! Design calculator for the atomic ensembles and light pulses: coupling
//! constant, photon budget, optical depth, optimal beam area and a list of
//! pass/warn checks.
//!
//! γ and Δ may be given in any common frequency unit; only their ratio enters.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::spin_light::{check_half_integer, coupling_constant, coupling_kappa, SpinLightError, VALIDITY_THRESHOLD};

/// Threshold used for "≪ 1".
pub const MUCH_LESS: f64 = 0.1;
/// Factor used for "≫".
pub const MUCH_GREATER: f64 = 10.0;
/// Relative tolerance of consistency checks.
pub const CONSISTENCY_TOL: f64 = 0.1;
/// Shortest pulse that avoids saturation, seconds.
pub const MIN_PULSE: f64 = 100e-9;
/// Default OPO bandwidth, Hz (correlation time 10 ns).
pub const DEFAULT_OPO_BANDWIDTH: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeasibilityError {
    #[error("missing required field(s): {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("cannot parse parameters: {0}")]
    Parse(String),
    #[error("invalid value for `{0}`: {1}")]
    Invalid(String, String),
    #[error(transparent)]
    Coupling(#[from] SpinLightError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Transition {
    D1,
    D2,
}

/// Hyperfine level `F = I ± 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

/// Dynamic vector polarizability `α_v`: ±1 on D1, ∓1/2 on D2, upper sign
/// for `F = I + 1/2`.
pub fn vector_polarizability(transition: Transition, branch: Branch) -> f64 {
    match (transition, branch) {
        (Transition::D1, Branch::Upper) => 1.0,
        (Transition::D1, Branch::Lower) => -1.0,
        (Transition::D2, Branch::Upper) => -0.5,
        (Transition::D2, Branch::Lower) => 0.5,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhysicalParams {
    /// Resonant cross section, cm².
    pub sigma: f64,
    /// Beam area, cm²; the optimal area is used when absent.
    pub area: Option<f64>,
    pub gamma: f64,
    pub delta: f64,
    pub alpha_v: f64,
    /// `α_v` from the (transition, branch) table, when those are given.
    pub alpha_v_table: Option<f64>,
    pub f: f64,
    pub i_nuclear: Option<f64>,
    pub n_atoms: f64,
    pub n_photons: Option<f64>,
    /// Wavelength, cm.
    pub lambda: Option<f64>,
    /// Cell dimensions, cm.
    pub cell: Option<[f64; 3]>,
    /// Atomic density, cm⁻³.
    pub density: Option<f64>,
    /// Pulse duration, s.
    pub pulse_duration: Option<f64>,
    /// OPO bandwidth Γ_OPO, Hz.
    pub opo_bandwidth: f64,
}

type Flat = BTreeMap<String, FlatValue>;

#[derive(Clone, Debug)]
enum FlatValue {
    Num(f64),
    Text(String),
}

fn flatten_toml(text: &str) -> Result<Flat, FeasibilityError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| FeasibilityError::Parse(e.to_string()))?;
    table
        .into_iter()
        .map(|(k, v)| {
            let v = match v {
                toml::Value::Float(f) => FlatValue::Num(f),
                toml::Value::Integer(i) => FlatValue::Num(i as f64),
                toml::Value::String(s) => FlatValue::Text(s),
                other => return Err(FeasibilityError::Invalid(k, format!("unsupported value {other}"))),
            };
            Ok((k, v))
        })
        .collect()
}

fn flatten_json(text: &str) -> Result<Flat, FeasibilityError> {
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(text).map_err(|e| FeasibilityError::Parse(e.to_string()))?;
    map.into_iter()
        .map(|(k, v)| {
            let v = match v {
                serde_json::Value::Number(n) => FlatValue::Num(n.as_f64().unwrap_or(f64::NAN)),
                serde_json::Value::String(s) => FlatValue::Text(s),
                other => return Err(FeasibilityError::Invalid(k, format!("unsupported value {other}"))),
            };
            Ok((k, v))
        })
        .collect()
}

struct Fields {
    flat: Flat,
    missing: Vec<String>,
}

impl Fields {
    fn num(&self, key: &str) -> Result<Option<f64>, FeasibilityError> {
        match self.flat.get(key) {
            None => Ok(None),
            Some(FlatValue::Num(v)) if v.is_finite() => Ok(Some(*v)),
            Some(FlatValue::Num(v)) => Err(FeasibilityError::Invalid(key.into(), format!("{v} is not finite"))),
            Some(FlatValue::Text(s)) => Err(FeasibilityError::Invalid(key.into(), format!("expected a number, got \"{s}\""))),
        }
    }

    fn required(&mut self, key: &str) -> Result<f64, FeasibilityError> {
        Ok(self.num(key)?.unwrap_or_else(|| {
            self.missing.push(key.into());
            f64::NAN
        }))
    }

    fn text(&self, key: &str) -> Result<Option<&str>, FeasibilityError> {
        match self.flat.get(key) {
            None => Ok(None),
            Some(FlatValue::Text(s)) => Ok(Some(s)),
            Some(FlatValue::Num(v)) => Err(FeasibilityError::Invalid(key.into(), format!("expected a string, got {v}"))),
        }
    }
}

impl PhysicalParams {
    /// Reads a flat key/value file: JSON when it starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self, FeasibilityError> {
        let flat = if text.trim_start().starts_with('{') { flatten_json(text)? } else { flatten_toml(text)? };
        let mut fields = Fields { flat, missing: Vec::new() };

        let gamma = fields.required("gamma")?;
        let delta = fields.required("delta")?;
        let f = fields.required("f")?;
        let n_atoms = fields.required("n_atoms")?;
        let lambda = fields.num("lambda")?;
        let sigma = match (fields.num("sigma")?, lambda) {
            (Some(s), _) => s,
            (None, Some(l)) => l * l * fields.num("sigma_factor")?.unwrap_or(1.0),
            (None, None) => {
                fields.missing.push("sigma".into());
                f64::NAN
            }
        };
        let i_nuclear = fields.num("i_nuclear")?;
        let transition = match fields.text("transition")? {
            None => None,
            Some("D1") | Some("d1") => Some(Transition::D1),
            Some("D2") | Some("d2") => Some(Transition::D2),
            Some(other) => return Err(FeasibilityError::Invalid("transition".into(), format!("`{other}` is not D1 or D2"))),
        };
        let branch = match (fields.text("branch")?, i_nuclear) {
            (Some("upper"), _) => Some(Branch::Upper),
            (Some("lower"), _) => Some(Branch::Lower),
            (Some(other), _) => {
                return Err(FeasibilityError::Invalid("branch".into(), format!("`{other}` is not upper or lower")))
            }
            (None, Some(i)) if (f - (i + 0.5)).abs() < 1e-9 => Some(Branch::Upper),
            (None, Some(i)) if (f - (i - 0.5)).abs() < 1e-9 => Some(Branch::Lower),
            (None, Some(i)) if f.is_finite() => {
                return Err(FeasibilityError::Invalid("i_nuclear".into(), format!("F = {f} is not I ± 1/2 for I = {i}")))
            }
            _ => None,
        };
        let alpha_v_table = transition.zip(branch).map(|(t, b)| vector_polarizability(t, b));
        let alpha_v = match (fields.num("alpha_v")?, alpha_v_table) {
            (Some(a), _) => a,
            (None, Some(a)) => a,
            (None, None) => {
                fields.missing.push("alpha_v".into());
                f64::NAN
            }
        };
        let cell = match (fields.num("cell_x")?, fields.num("cell_y")?, fields.num("cell_z")?) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        };
        let params = PhysicalParams {
            sigma,
            area: fields.num("area")?,
            gamma,
            delta,
            alpha_v,
            alpha_v_table,
            f,
            i_nuclear,
            n_atoms,
            n_photons: fields.num("n_photons")?,
            lambda,
            cell,
            density: fields.num("density")?,
            pulse_duration: fields.num("pulse_duration")?,
            opo_bandwidth: fields.num("opo_bandwidth")?.unwrap_or(DEFAULT_OPO_BANDWIDTH),
        };
        if !fields.missing.is_empty() {
            return Err(FeasibilityError::Missing(fields.missing));
        }
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), FeasibilityError> {
        let positive = [
            ("sigma", Some(self.sigma)),
            ("area", self.area),
            ("gamma", Some(self.gamma)),
            ("n_atoms", Some(self.n_atoms)),
            ("n_photons", self.n_photons),
            ("density", self.density),
            ("pulse_duration", self.pulse_duration),
            ("opo_bandwidth", Some(self.opo_bandwidth)),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(FeasibilityError::Invalid(name.into(), format!("{v} must be positive")));
                }
            }
        }
        if self.delta == 0.0 {
            return Err(FeasibilityError::Invalid("delta".into(), "detuning must be nonzero".into()));
        }
        if self.alpha_v == 0.0 {
            return Err(FeasibilityError::Invalid("alpha_v".into(), "polarizability must be nonzero".into()));
        }
        check_half_integer(self.f).map_err(|e| FeasibilityError::Invalid("f".into(), e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub threshold: f64,
    /// The relation the check is based on.
    pub anchor: String,
}

impl Check {
    fn new(name: &str, pass: bool, value: f64, threshold: f64, anchor: &str) -> Self {
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Warn },
            value,
            threshold,
            anchor: anchor.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub sigma: f64,
    pub area: f64,
    pub a: f64,
    pub kappa: f64,
    /// Photons per pulse for unity coupling, `2 F N`.
    pub n_required: u64,
    pub n_photons: f64,
    pub gamma_over_delta: f64,
    /// Off-resonant optical depth `σ N γ / (A |Δ|)`.
    pub alpha_delta: f64,
    /// `σ N / A`, the factor separating `α_Δ` from `γ/|Δ|`.
    pub optical_depth_ratio: f64,
    /// Self-consistent optimum of `A = σ n |α_v| α_Δ(A) / (2F)`.
    pub a_optimal: f64,
    /// The same formula with `α_Δ` replaced by `γ/|Δ|`.
    pub a_optimal_simplified: f64,
    /// `|a| / (2/n)`; 1 at unity coupling.
    pub unity_ratio: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn within(value: f64, target: f64) -> bool {
    ((value - target) / target).abs() <= CONSISTENCY_TOL
}

pub fn optimal_area(p: &PhysicalParams, n_photons: f64) -> f64 {
    // A = σ n |α_v| α_Δ / (2F) with α_Δ = σ N γ / (A |Δ|), solved for A.
    p.sigma * (n_photons * p.n_atoms * p.alpha_v.abs() * p.gamma / (2.0 * p.f * p.delta.abs())).sqrt()
}

pub fn design_report(p: &PhysicalParams) -> Result<FeasibilityReport, FeasibilityError> {
    p.validate()?;
    let mut notes = Vec::new();
    let n_required = (2.0 * p.f * p.n_atoms).round() as u64;
    let n = p.n_photons.unwrap_or(n_required as f64);
    let gamma_over_delta = p.gamma / p.delta.abs();
    let a_optimal = optimal_area(p, n);
    let a_optimal_simplified = p.sigma * n * p.alpha_v.abs() * gamma_over_delta / (2.0 * p.f);
    let area = p.area.unwrap_or_else(|| {
        notes.push("no beam area given; coupling evaluated at the optimal area".into());
        a_optimal
    });
    let a = coupling_constant(p.sigma, area, p.f, p.gamma, p.delta, p.alpha_v)?;
    let kappa = coupling_kappa(a, n, p.n_atoms, p.f)?;
    let optical_depth_ratio = p.sigma * p.n_atoms / area;
    let alpha_delta = optical_depth_ratio * gamma_over_delta;
    let unity_ratio = a.abs() / (2.0 / n);

    let mut checks = vec![
        Check::new("gamma_over_delta", gamma_over_delta < MUCH_LESS, gamma_over_delta, MUCH_LESS, "γ/|Δ| ≪ 1"),
        Check::new("weak_focusing", area / p.sigma >= MUCH_GREATER, area / p.sigma, MUCH_GREATER, "A ≫ σ ≈ λ²"),
        Check::new("unity_coupling", within(unity_ratio, 1.0), unity_ratio, 1.0, "½ a n = a N F = 1 ⇒ |a| = 2/n"),
        Check::new(
            "optical_depth_consistency",
            within(optical_depth_ratio, 1.0),
            optical_depth_ratio,
            1.0,
            "α_Δ = σ N γ / (A |Δ|) = γ/|Δ| requires σ N / A = 1",
        ),
        Check::new(
            "spin_linearization",
            p.n_atoms * p.f >= VALIDITY_THRESHOLD,
            p.n_atoms * p.f,
            VALIDITY_THRESHOLD,
            "N F ≫ 1",
        ),
        Check::new("light_linearization", n >= VALIDITY_THRESHOLD, n, VALIDITY_THRESHOLD, "n ≫ 1"),
    ];
    if let Some(given) = p.n_photons {
        checks.push(Check::new("photon_number", within(given, n_required as f64), given, n_required as f64, "n = 2 F N"));
    }
    if let Some(table) = p.alpha_v_table {
        checks.push(Check::new(
            "alpha_v_table",
            (p.alpha_v - table).abs() < 1e-12,
            p.alpha_v,
            table,
            "α_v = ±1 (D1), ∓1/2 (D2), upper sign for F = I + 1/2",
        ));
    }
    if let (Some([x, y, z]), Some(density)) = (p.cell, p.density) {
        let count = density * x * y * z;
        checks.push(Check::new("atom_count", within(count, p.n_atoms), count, p.n_atoms, "N = n_A × cell volume"));
    }
    if let Some(tau) = p.pulse_duration {
        checks.push(Check::new("pulse_saturation", tau > MIN_PULSE, tau, MIN_PULSE, "pulse duration > 100 ns"));
        let corr = 1.0 / p.opo_bandwidth;
        checks.push(Check::new("pulse_opo_bandwidth", tau > corr, tau, corr, "pulse duration > 1/Γ_OPO"));
    }

    Ok(FeasibilityReport {
        sigma: p.sigma,
        area,
        a,
        kappa,
        n_required,
        n_photons: n,
        gamma_over_delta,
        alpha_delta,
        optical_depth_ratio,
        a_optimal,
        a_optimal_simplified,
        unity_ratio,
        checks,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarizability_table() {
        assert_eq!(vector_polarizability(Transition::D1, Branch::Upper), 1.0);
        assert_eq!(vector_polarizability(Transition::D1, Branch::Lower), -1.0);
        assert_eq!(vector_polarizability(Transition::D2, Branch::Upper), -0.5);
        assert_eq!(vector_polarizability(Transition::D2, Branch::Lower), 0.5);
    }

    #[test]
    fn missing_fields_are_listed() {
        let err = PhysicalParams::parse("delta = 8e8\nf = 4\n").unwrap_err();
        assert_eq!(
            err,
            FeasibilityError::Missing(vec!["gamma".into(), "n_atoms".into(), "sigma".into(), "alpha_v".into()])
        );
    }

    #[test]
    fn branch_from_nuclear_spin() {
        let text = "gamma = 5e6\ndelta = 8e8\nf = 3\ni_nuclear = 3.5\nn_atoms = 1e5\nsigma = 1e-9\ntransition = \"D2\"";
        let p = PhysicalParams::parse(text).unwrap();
        assert_eq!(p.alpha_v, 0.5);
        let json = r#"{"gamma": 5e6, "delta": -8e8, "f": 4, "n_atoms": 100000, "sigma": 1e-9, "alpha_v": 1}"#;
        assert_eq!(PhysicalParams::parse(json).unwrap().delta, -8e8);
    }

    #[test]
    fn doubling_area_halves_coupling() {
        let text = "gamma = 5e6\ndelta = 8e8\nf = 4\nn_atoms = 1e5\nsigma = 7e-9\nalpha_v = -0.5\narea = 1e-6";
        let p = PhysicalParams::parse(text).unwrap();
        let wide = PhysicalParams { area: Some(2e-6), ..p.clone() };
        let (r1, r2) = (design_report(&p).unwrap(), design_report(&wide).unwrap());
        assert!((r2.a.abs() - r1.a.abs() / 2.0).abs() < 1e-24);
    }
}
