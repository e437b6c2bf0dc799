//! Symbolic Heisenberg-picture propagation.
//!
//! Every final operator is tracked as a linear combination of the initial
//! quadratures, measurement outcomes and a constant. This is independent of
//! the state-space engines and serves as their cross-check.

mod exact;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::gaussian::{cos_sin, GaussianState};
use crate::program::{Program, ProgramError, Quadrature, Step};

pub use exact::{propagate_exact, ExactError, ExactExpr, ExactTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Program(#[from] ProgramError),
}

pub fn symbol(label: &str, q: Quadrature) -> String {
    format!("{label}.{}", q.name())
}

fn split_symbol(sym: &str) -> (&str, Quadrature) {
    let (label, q) = sym.rsplit_once('.').expect("symbol has a quadrature suffix");
    (label, if q == "x" { Quadrature::X } else { Quadrature::P })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OperatorExpr {
    /// Initial quadrature `"mode.x"` / `"mode.p"` → coefficient.
    pub coefficients: BTreeMap<String, f64>,
    /// Measurement id → coefficient.
    pub outcome_terms: BTreeMap<String, f64>,
    pub constant: f64,
}

impl OperatorExpr {
    pub fn initial(label: &str, q: Quadrature) -> Self {
        Self { coefficients: [(symbol(label, q), 1.0)].into(), ..Self::default() }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, other: &OperatorExpr, c: f64) {
        for (k, v) in &other.coefficients {
            *self.coefficients.entry(k.clone()).or_default() += c * v;
        }
        for (k, v) in &other.outcome_terms {
            *self.outcome_terms.entry(k.clone()).or_default() += c * v;
        }
        self.constant += c * other.constant;
    }

    pub fn combine(a: &OperatorExpr, ca: f64, b: &OperatorExpr, cb: f64) -> OperatorExpr {
        let mut out = OperatorExpr::default();
        out.add_scaled(a, ca);
        out.add_scaled(b, cb);
        out
    }

    pub fn coefficient(&self, label: &str, q: Quadrature) -> f64 {
        self.coefficients.get(&symbol(label, q)).copied().unwrap_or(0.0)
    }

    /// `[A, B] / i` from the canonical relations of the initial quadratures.
    /// Both operands must be resolved (no outcome terms).
    pub fn commutator(&self, other: &OperatorExpr) -> f64 {
        self.coefficients
            .iter()
            .map(|(sym, a)| {
                let (label, q) = split_symbol(sym);
                let conj = symbol(label, if q == Quadrature::X { Quadrature::P } else { Quadrature::X });
                let b = other.coefficients.get(&conj).copied().unwrap_or(0.0);
                if q == Quadrature::X {
                    a * b
                } else {
                    -a * b
                }
            })
            .sum()
    }

    /// Euclidean norm of the initial-operator coefficients.
    pub fn norm(&self) -> f64 {
        self.coefficients.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Expectation value given initial means per symbol.
    pub fn mean(&self, initial: &BTreeMap<String, f64>) -> f64 {
        self.coefficients.iter().map(|(s, c)| c * initial.get(s).copied().unwrap_or(0.0)).sum::<f64>() + self.constant
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeRow {
    pub label: String,
    pub x: OperatorExpr,
    pub p: OperatorExpr,
}

/// Final operators of a program: surviving modes and measurement outcomes,
/// with outcome terms substituted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleTable {
    pub modes: Vec<ModeRow>,
    pub outcomes: Vec<(String, OperatorExpr)>,
}

/// Symbolic propagation of a program's steps.
pub fn propagate(program: &Program) -> Result<OracleTable, OracleError> {
    program.validate()?;
    let mut live: Vec<ModeRow> = program
        .modes
        .iter()
        .map(|m| ModeRow {
            label: m.label.clone(),
            x: OperatorExpr::initial(&m.label, Quadrature::X),
            p: OperatorExpr::initial(&m.label, Quadrature::P),
        })
        .collect();
    let mut outcomes: Vec<(String, OperatorExpr)> = Vec::new();
    let find = |live: &[ModeRow], l: &str| live.iter().position(|m| m.label == l).expect("validated mode");

    for step in &program.steps {
        match step {
            Step::Squeeze { a, b, r } => {
                let (ia, ib) = (find(&live, a), find(&live, b));
                let (c, s) = (r.cosh(), r.sinh());
                let (xa, pa, xb, pb) = (live[ia].x.clone(), live[ia].p.clone(), live[ib].x.clone(), live[ib].p.clone());
                live[ia].x = OperatorExpr::combine(&xa, c, &xb, -s);
                live[ia].p = OperatorExpr::combine(&pa, c, &pb, s);
                live[ib].x = OperatorExpr::combine(&xb, c, &xa, -s);
                live[ib].p = OperatorExpr::combine(&pb, c, &pa, s);
            }
            Step::Qnd { a, b, gain } => {
                let (ia, ib) = (find(&live, a), find(&live, b));
                let (xa, xb) = (live[ia].x.clone(), live[ib].x.clone());
                live[ia].p.add_scaled(&xb, *gain);
                live[ib].p.add_scaled(&xa, *gain);
            }
            Step::Phase { mode, theta } => {
                let i = find(&live, mode);
                let (c, s) = cos_sin(*theta);
                let (x, p) = (live[i].x.clone(), live[i].p.clone());
                live[i].x = OperatorExpr::combine(&x, c, &p, s);
                live[i].p = OperatorExpr::combine(&x, -s, &p, c);
            }
            Step::Measure { mode, angle, id } => {
                let i = find(&live, mode);
                let (c, s) = cos_sin(*angle);
                let row = live.remove(i);
                outcomes.push((id.clone(), OperatorExpr::combine(&row.x, c, &row.p, s)));
            }
            Step::Displace { mode, quadrature, terms, constant } => {
                let i = find(&live, mode);
                let target = match quadrature {
                    Quadrature::X => &mut live[i].x,
                    Quadrature::P => &mut live[i].p,
                };
                for (id, g) in terms {
                    *target.outcome_terms.entry(id.clone()).or_default() += g;
                }
                target.constant += constant;
            }
        }
    }

    // Outcomes only reference earlier outcomes, so one ordered pass resolves them.
    let mut resolved: Vec<(String, OperatorExpr)> = Vec::with_capacity(outcomes.len());
    for (id, expr) in outcomes {
        let r = resolve_with(&expr, &resolved);
        resolved.push((id, r));
    }
    let modes = live
        .into_iter()
        .map(|m| ModeRow { x: resolve_with(&m.x, &resolved), p: resolve_with(&m.p, &resolved), label: m.label })
        .collect();
    Ok(OracleTable { modes, outcomes: resolved })
}

fn resolve_with(expr: &OperatorExpr, outcomes: &[(String, OperatorExpr)]) -> OperatorExpr {
    let mut out = OperatorExpr { coefficients: expr.coefficients.clone(), constant: expr.constant, ..Default::default() };
    for (id, g) in &expr.outcome_terms {
        let (_, o) = outcomes.iter().find(|(k, _)| k == id).expect("outcome defined earlier");
        out.add_scaled(o, *g);
    }
    out
}

impl OracleTable {
    pub fn mode(&self, label: &str) -> Option<&ModeRow> {
        self.modes.iter().find(|m| m.label == label)
    }

    pub fn row(&self, label: &str, q: Quadrature) -> Option<&OperatorExpr> {
        self.mode(label).map(|m| if q == Quadrature::X { &m.x } else { &m.p })
    }

    /// Output rows (x, p per output, io order).
    pub fn output_rows(&self, program: &Program) -> Vec<&OperatorExpr> {
        program
            .io_pairs()
            .iter()
            .flat_map(|(_, out)| {
                let m = self.mode(out).expect("output survives");
                [&m.x, &m.p]
            })
            .collect()
    }

    /// Output means and covariance given the initial single-mode states of
    /// every declared mode (declaration order).
    pub fn output_moments(&self, program: &Program, initial: &[GaussianState]) -> (DVector<f64>, DMatrix<f64>) {
        let mut means = BTreeMap::new();
        let mut blocks = BTreeMap::new();
        for (decl, s) in program.modes.iter().zip(initial) {
            means.insert(symbol(&decl.label, Quadrature::X), s.mean()[0]);
            means.insert(symbol(&decl.label, Quadrature::P), s.mean()[1]);
            blocks.insert(decl.label.as_str(), s.cov().clone());
        }
        let rows = self.output_rows(program);
        let mean = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.mean(&means)));
        let cov = DMatrix::from_fn(rows.len(), rows.len(), |i, j| {
            let mut acc = 0.0;
            for (si, ci) in &rows[i].coefficients {
                let (li, qi) = split_symbol(si);
                for qj in [Quadrature::X, Quadrature::P] {
                    let cj = rows[j].coefficients.get(&symbol(li, qj)).copied().unwrap_or(0.0);
                    acc += ci * cj * blocks[li][(qi.index(), qj.index())];
                }
            }
            acc
        });
        (mean, cov)
    }

    /// Coefficients of the outputs on the input quadratures.
    pub fn gain_matrix(&self, program: &Program) -> DMatrix<f64> {
        let pairs = program.io_pairs();
        let rows = self.output_rows(program);
        DMatrix::from_fn(rows.len(), 2 * pairs.len(), |i, j| {
            let q = if j % 2 == 0 { Quadrature::X } else { Quadrature::P };
            rows[i].coefficient(&pairs[j / 2].0, q)
        })
    }

    /// Largest deviation of any pairwise commutator of the final operators
    /// (surviving quadratures and outcomes) from its canonical value, in
    /// units of `1 + |A||B|` so that round-off in large coefficients does
    /// not count as a defect.
    pub fn commutator_defect(&self) -> f64 {
        let mut ops: Vec<(Option<usize>, Quadrature, &OperatorExpr)> = Vec::new();
        for (k, m) in self.modes.iter().enumerate() {
            ops.push((Some(k), Quadrature::X, &m.x));
            ops.push((Some(k), Quadrature::P, &m.p));
        }
        for (_, o) in &self.outcomes {
            ops.push((None, Quadrature::X, o));
        }
        let mut worst = 0.0f64;
        for (i, a) in ops.iter().enumerate() {
            for b in &ops[i + 1..] {
                let canonical = match (a, b) {
                    ((Some(i), Quadrature::X, _), (Some(j), Quadrature::P, _)) if i == j => 1.0,
                    _ => 0.0,
                };
                let scale = 1.0 + a.2.norm() * b.2.norm();
                worst = worst.max((a.2.commutator(b.2) - canonical).abs() / scale);
            }
        }
        worst
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{ModeDecl, ModeKind};

    #[test]
    fn single_qnd_row() {
        let program = Program {
            name: "qnd".into(),
            description: String::new(),
            modes: ["light", "atom"]
                .iter()
                .map(|l| ModeDecl { label: l.to_string(), kind: ModeKind::Vacuum })
                .collect(),
            steps: vec![Step::Qnd { a: "light".into(), b: "atom".into(), gain: 1.0 }],
            io: vec![],
        };
        let t = propagate(&program).unwrap();
        let p = t.row("light", Quadrature::P).unwrap();
        assert_eq!(p.coefficient("light", Quadrature::P), 1.0);
        assert_eq!(p.coefficient("atom", Quadrature::X), 1.0);
        assert_eq!(p.coefficients.len(), 2);
        assert_eq!(t.commutator_defect(), 0.0);
    }
}
