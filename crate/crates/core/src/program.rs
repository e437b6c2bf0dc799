//! Compiled protocol: declared modes, an ordered step list and the
//! input → output pairing of logical systems.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::GaussianState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub fn index(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quadrature::X => "x",
            Quadrature::P => "p",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeKind {
    Vacuum,
    Spin { f: f64, n_atoms: f64 },
    Light { n_photons: f64 },
    Coherent { x: f64, p: f64 },
}

impl ModeKind {
    /// Canonical state of the declared mode: coherent spin states and
    /// coherent light both map to the vacuum.
    pub fn initial_state(&self) -> GaussianState {
        match *self {
            ModeKind::Coherent { x, p } => GaussianState::coherent(x, p),
            _ => GaussianState::vacuum(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeDecl {
    pub label: String,
    pub kind: ModeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Squeeze { a: String, b: String, r: f64 },
    Qnd { a: String, b: String, gain: f64 },
    Phase { mode: String, theta: f64 },
    /// Destructive homodyne of `x cos(angle) + p sin(angle)`.
    Measure { mode: String, angle: f64, id: String },
    /// Adds `Σ gain · outcome + constant` to one quadrature.
    Displace { mode: String, quadrature: Quadrature, terms: Vec<(String, f64)>, constant: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Program {
    pub name: String,
    pub description: String,
    pub modes: Vec<ModeDecl>,
    pub steps: Vec<Step>,
    /// `(input, output)` pairs; empty means every unmeasured mode maps to itself.
    pub io: Vec<(String, String)>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("mode `{0}` is declared twice")]
    DuplicateMode(String),
    #[error("step {step}: mode `{mode}` is not declared")]
    UndeclaredMode { step: usize, mode: String },
    #[error("step {step}: mode `{mode}` was already measured")]
    UseAfterMeasure { step: usize, mode: String },
    #[error("step {step}: two-mode gate needs distinct modes, got `{0}` twice", step = .1)]
    SameMode(String, usize),
    #[error("step {step}: outcome `{id}` is not defined by an earlier measurement")]
    UndefinedOutcome { step: usize, id: String },
    #[error("step {step}: outcome `{id}` is defined twice")]
    DuplicateOutcome { step: usize, id: String },
    #[error("step {step}: non-finite parameter")]
    NonFinite { step: usize },
    #[error("io pair references undeclared mode `{0}`")]
    UndeclaredIo(String),
    #[error("output mode `{0}` is measured before the end of the protocol")]
    OutputMeasured(String),
    #[error("mode `{0}` appears in more than one io pair on the same side")]
    DuplicateIo(String),
    #[error("expected {expected} input states, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("state for `{0}` must be single-mode")]
    NotSingleMode(String),
}

impl Step {
    pub fn modes(&self) -> Vec<&str> {
        match self {
            Step::Squeeze { a, b, .. } | Step::Qnd { a, b, .. } => vec![a, b],
            Step::Phase { mode, .. } | Step::Measure { mode, .. } | Step::Displace { mode, .. } => vec![mode],
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Step::Squeeze { r: v, .. } | Step::Qnd { gain: v, .. } | Step::Phase { theta: v, .. } => v.is_finite(),
            Step::Measure { angle, .. } => angle.is_finite(),
            Step::Displace { terms, constant, .. } => constant.is_finite() && terms.iter().all(|(_, g)| g.is_finite()),
        }
    }
}

impl Program {
    pub fn mode(&self, label: &str) -> Option<&ModeDecl> {
        self.modes.iter().find(|m| m.label == label)
    }

    /// Modes measured somewhere in the step list.
    pub fn measured_modes(&self) -> BTreeSet<&str> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Measure { mode, .. } => Some(mode.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Outcome ids in measurement order.
    pub fn outcome_ids(&self) -> Vec<&str> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Measure { id, .. } => Some(id.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn io_pairs(&self) -> Vec<(String, String)> {
        if !self.io.is_empty() {
            return self.io.clone();
        }
        let measured = self.measured_modes();
        self.modes
            .iter()
            .filter(|m| !measured.contains(m.label.as_str()))
            .map(|m| (m.label.clone(), m.label.clone()))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let mut declared = HashMap::new();
        for m in &self.modes {
            if declared.insert(m.label.as_str(), true).is_some() {
                return Err(ProgramError::DuplicateMode(m.label.clone()));
            }
        }
        let mut outcomes = BTreeSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            if !step.is_finite() {
                return Err(ProgramError::NonFinite { step: i });
            }
            let modes = step.modes();
            for &m in &modes {
                match declared.get(m) {
                    None => return Err(ProgramError::UndeclaredMode { step: i, mode: m.to_string() }),
                    Some(false) => return Err(ProgramError::UseAfterMeasure { step: i, mode: m.to_string() }),
                    Some(true) => {}
                }
            }
            if modes.len() == 2 && modes[0] == modes[1] {
                return Err(ProgramError::SameMode(modes[0].to_string(), i));
            }
            match step {
                Step::Measure { mode, id, .. } => {
                    if !outcomes.insert(id.as_str()) {
                        return Err(ProgramError::DuplicateOutcome { step: i, id: id.clone() });
                    }
                    declared.insert(mode.as_str(), false);
                }
                Step::Displace { terms, .. } => {
                    if let Some((id, _)) = terms.iter().find(|(id, _)| !outcomes.contains(id.as_str())) {
                        return Err(ProgramError::UndefinedOutcome { step: i, id: id.clone() });
                    }
                }
                _ => {}
            }
        }
        let (mut ins, mut outs) = (BTreeSet::new(), BTreeSet::new());
        for (input, output) in &self.io {
            for m in [input, output] {
                if !declared.contains_key(m.as_str()) {
                    return Err(ProgramError::UndeclaredIo(m.clone()));
                }
            }
            if !declared[output.as_str()] {
                return Err(ProgramError::OutputMeasured(output.clone()));
            }
            if !ins.insert(input.as_str()) {
                return Err(ProgramError::DuplicateIo(input.clone()));
            }
            if !outs.insert(output.as_str()) {
                return Err(ProgramError::DuplicateIo(output.clone()));
            }
        }
        Ok(())
    }

    /// Initial single-mode states in declaration order. `overrides` replace
    /// the declared state of the named modes.
    pub fn initial_states(&self, overrides: &[(String, GaussianState)]) -> Result<Vec<GaussianState>, ProgramError> {
        for (label, state) in overrides {
            if self.mode(label).is_none() {
                return Err(ProgramError::UndeclaredIo(label.clone()));
            }
            if state.num_modes() != 1 {
                return Err(ProgramError::NotSingleMode(label.clone()));
            }
        }
        Ok(self
            .modes
            .iter()
            .map(|m| {
                let state = overrides
                    .iter()
                    .find(|(l, _)| *l == m.label)
                    .map(|(_, s)| s.clone())
                    .unwrap_or_else(|| m.kind.initial_state());
                state.with_labels([m.label.clone()]).expect("single-mode state")
            })
            .collect())
    }
}
