//! Tangent-plane maps from collective spins and bright Stokes fields onto
//! canonical modes, and the QND coupling strength.
//!
//! A strongly polarized system has one macroscopic component; the two
//! transverse components fluctuate like a quadrature pair. Canonical
//! variables are normalized to vacuum variance 1/2:
//!
//! * spin polarized along +x: `x = F_z / √(N F)`, `p = F_y / √(N F)`
//! * x-polarized light: `x = S_z / √(n/2)`, `p = S_y / √(n/2)`

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Systems with fewer spin or photon quanta than this get a linearization warning.
pub const VALIDITY_THRESHOLD: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinLightError {
    #[error("{0} must be positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("spin F must be a positive half-integer, got {0}")]
    NotHalfInteger(f64),
    #[error("zero denominator in coupling constant ({0} = 0)")]
    ZeroDenominator(&'static str),
    #[error("frame rotation about {axis} would tilt a {polarization}-polarized spin out of the tangent plane")]
    RotationAxis { axis: Axis, polarization: Axis },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A physical component with sign, e.g. `-F_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Component {
    pub axis: Axis,
    pub sign: f64,
}

/// Stokes normalization used when reading light as a quadrature pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StokesNorm {
    /// `√(n/2)`: vacuum variance 1/2, symmetric QND gain.
    #[default]
    Canonical,
    /// `√n`: quadratures with vacuum variance 1/4, read as if canonical.
    SqrtN,
}

impl StokesNorm {
    pub fn scale(self, n_photons: f64) -> f64 {
        match self {
            StokesNorm::Canonical => (n_photons / 2.0).sqrt(),
            StokesNorm::SqrtN => n_photons.sqrt(),
        }
    }

    /// Factor multiplying every spin-light gain relative to the canonical map.
    pub fn gain_factor(self) -> f64 {
        match self {
            StokesNorm::Canonical => 1.0,
            StokesNorm::SqrtN => 1.0 / SQRT_2,
        }
    }
}

impl std::str::FromStr for StokesNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(StokesNorm::Canonical),
            "sqrt_n" => Ok(StokesNorm::SqrtN),
            other => Err(format!("unknown Stokes normalization `{other}` (expected canonical or sqrt_n)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinEnsemble {
    pub f: f64,
    pub n_atoms: f64,
    pub polarization: Axis,
    /// `false` for polarization along the negative axis.
    pub positive: bool,
    pub label: String,
}

impl SpinEnsemble {
    pub fn x_polarized(label: impl Into<String>, f: f64, n_atoms: f64) -> Self {
        Self { f, n_atoms, polarization: Axis::X, positive: true, label: label.into() }
    }

    pub fn validate(&self) -> Result<(), SpinLightError> {
        check_half_integer(self.f)?;
        if !(self.n_atoms.is_finite() && self.n_atoms >= 1.0) {
            return Err(SpinLightError::NonPositive("N", self.n_atoms));
        }
        Ok(())
    }

    /// Macroscopic polarization `<F_axis> = N F`.
    pub fn polarization_length(&self) -> f64 {
        self.n_atoms * self.f
    }
}

pub fn check_half_integer(f: f64) -> Result<(), SpinLightError> {
    let twice = 2.0 * f;
    if f.is_finite() && f > 0.0 && (twice - twice.round()).abs() < 1e-12 {
        Ok(())
    } else {
        Err(SpinLightError::NotHalfInteger(f))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StokesField {
    pub n_photons: f64,
    pub label: String,
}

/// How physical components map onto a canonical `(x, p)` pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeMap {
    pub label: String,
    pub scale: f64,
    pub x: Component,
    pub p: Component,
    pub warning: Option<String>,
}

impl ModeMap {
    /// Canonical `(x, p)` from the physical values of the `x` and `p` components.
    pub fn to_canonical(&self, physical: [f64; 2]) -> [f64; 2] {
        [physical[0] * self.x.sign / self.scale, physical[1] * self.p.sign / self.scale]
    }

    pub fn to_physical(&self, canonical: [f64; 2]) -> [f64; 2] {
        [canonical[0] * self.scale * self.x.sign, canonical[1] * self.scale * self.p.sign]
    }

    /// Canonical variance from a physical component variance.
    pub fn variance_to_canonical(&self, physical: f64) -> f64 {
        physical / (self.scale * self.scale)
    }
}

fn transverse(polarization: Axis) -> (Axis, Axis) {
    // (x, p) components: a cyclic permutation of (z, y) for x-polarization.
    match polarization {
        Axis::X => (Axis::Z, Axis::Y),
        Axis::Y => (Axis::X, Axis::Z),
        Axis::Z => (Axis::Y, Axis::X),
    }
}

pub fn spin_to_mode(ens: &SpinEnsemble) -> Result<ModeMap, SpinLightError> {
    ens.validate()?;
    let (xa, pa) = transverse(ens.polarization);
    let len = ens.polarization_length();
    let warning = (len < VALIDITY_THRESHOLD)
        .then(|| format!("{}: N·F = {len} is too small for the tangent-plane map", ens.label));
    Ok(ModeMap {
        label: ens.label.clone(),
        scale: len.sqrt(),
        x: Component { axis: xa, sign: 1.0 },
        // Reversing the polarization is a π turn about the x-component axis.
        p: Component { axis: pa, sign: if ens.positive { 1.0 } else { -1.0 } },
        warning,
    })
}

pub fn stokes_to_mode(field: &StokesField, norm: StokesNorm) -> Result<ModeMap, SpinLightError> {
    if !(field.n_photons.is_finite() && field.n_photons > 0.0) {
        return Err(SpinLightError::NonPositive("n", field.n_photons));
    }
    let warning = (field.n_photons < VALIDITY_THRESHOLD)
        .then(|| format!("{}: n = {} photons is too few for the linearized Stokes map", field.label, field.n_photons));
    Ok(ModeMap {
        label: field.label.clone(),
        scale: norm.scale(field.n_photons),
        x: Component { axis: Axis::Z, sign: 1.0 },
        p: Component { axis: Axis::Y, sign: 1.0 },
        warning,
    })
}

/// Quadratures written with vacuum variance 1/4 convert as `x = √2 X`.
pub fn quarter_variance_to_canonical(value: f64) -> f64 {
    SQRT_2 * value
}

/// `a = (σ / (A F)) (γ / Δ) α_v`, radians per unit spin-photon product.
pub fn coupling_constant(sigma: f64, area: f64, f: f64, gamma: f64, delta: f64, alpha_v: f64) -> Result<f64, SpinLightError> {
    for (name, v) in [("A", area), ("F", f), ("Δ", delta)] {
        if v == 0.0 {
            return Err(SpinLightError::ZeroDenominator(name));
        }
    }
    Ok(sigma / (area * f) * (gamma / delta) * alpha_v)
}

/// `κ = |a| √(F N n / 2)`.
pub fn coupling_kappa(a: f64, n_photons: f64, n_atoms: f64, f: f64) -> Result<f64, SpinLightError> {
    for (name, v) in [("|a|", a.abs()), ("n", n_photons), ("N", n_atoms), ("F", f)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(SpinLightError::NonPositive(name, v));
        }
    }
    Ok(a.abs() * (f * n_atoms * n_photons / 2.0).sqrt())
}

/// Physical parameters behind a QND gain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingParams {
    pub sigma: f64,
    pub area: f64,
    pub gamma: f64,
    pub delta: f64,
    pub alpha_v: f64,
    pub f: f64,
    pub n_atoms: f64,
    pub n_photons: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingSpec {
    pub kappa: f64,
    pub a: f64,
    pub params: CouplingParams,
}

impl CouplingSpec {
    pub fn from_params(params: CouplingParams) -> Result<Self, SpinLightError> {
        let a = coupling_constant(params.sigma, params.area, params.f, params.gamma, params.delta, params.alpha_v)?;
        let kappa = coupling_kappa(a, params.n_photons, params.n_atoms, params.f)?;
        Ok(Self { kappa, a, params })
    }

    /// Gain recomputed from the backing parameters.
    pub fn recompute(&self) -> Result<f64, SpinLightError> {
        Self::from_params(self.params.clone()).map(|s| s.kappa)
    }
}

/// Phase shift realizing a rigid rotation of an ensemble about its
/// polarization axis.
///
/// For +x polarization, a rotation by φ sends `F_z → F_z cos φ + F_y sin φ`
/// and `F_y → F_y cos φ − F_z sin φ`, which is `phase_shift(φ)` on the mode.
pub fn frame_rotation(ens: &SpinEnsemble, axis: Axis, angle: f64) -> Result<f64, SpinLightError> {
    if axis != ens.polarization {
        return Err(SpinLightError::RotationAxis { axis, polarization: ens.polarization });
    }
    Ok(if ens.positive { angle } else { -angle })
}
