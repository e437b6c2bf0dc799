//! Exact rational propagation for programs whose parameters are rational:
//! quarter-turn phases, unsqueezed sources and gains that are exact
//! decimal-like fractions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use thiserror::Error;

use super::symbol;
use crate::gaussian::cos_sin;
use crate::program::{Program, ProgramError, Quadrature, Step};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("step {step}: {what} = {value} has no exact rational form")]
    NotRational { step: usize, what: &'static str, value: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExactExpr {
    pub coefficients: BTreeMap<String, BigRational>,
}

impl ExactExpr {
    fn initial(label: &str, q: Quadrature) -> Self {
        Self { coefficients: [(symbol(label, q), BigRational::one())].into() }
    }

    fn add_scaled(&mut self, other: &ExactExpr, c: &BigRational) {
        for (k, v) in &other.coefficients {
            let e = self.coefficients.entry(k.clone()).or_insert_with(BigRational::zero);
            *e += c * v;
        }
        self.coefficients.retain(|_, v| !v.is_zero());
    }

    fn combine(a: &ExactExpr, ca: &BigRational, b: &ExactExpr, cb: &BigRational) -> ExactExpr {
        let mut out = ExactExpr::default();
        out.add_scaled(a, ca);
        out.add_scaled(b, cb);
        out
    }

    /// `[A, B] / i`, exactly.
    pub fn commutator(&self, other: &ExactExpr) -> BigRational {
        let mut acc = BigRational::zero();
        for (sym, a) in &self.coefficients {
            let (label, q) = sym.rsplit_once('.').expect("symbol");
            let (conj, sign) = if q == "x" { ("p", 1) } else { ("x", -1) };
            if let Some(b) = other.coefficients.get(&format!("{label}.{conj}")) {
                acc += a * b * BigRational::from_integer(BigInt::from(sign));
            }
        }
        acc
    }
}

/// Surviving quadratures `(label, x, p)` and outcome operators.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExactTable {
    pub modes: Vec<(String, ExactExpr, ExactExpr)>,
    pub outcomes: Vec<(String, ExactExpr)>,
}

impl ExactTable {
    /// True iff every pairwise commutator equals its canonical value exactly.
    pub fn commutators_exact(&self) -> bool {
        let mut ops: Vec<(Option<usize>, bool, &ExactExpr)> = Vec::new();
        for (k, (_, x, p)) in self.modes.iter().enumerate() {
            ops.push((Some(k), false, x));
            ops.push((Some(k), true, p));
        }
        ops.extend(self.outcomes.iter().map(|(_, o)| (None, false, o)));
        ops.iter().enumerate().all(|(i, a)| {
            ops[i + 1..].iter().all(|b| {
                let canonical = matches!((a, b), ((Some(i), false, _), (Some(j), true, _)) if i == j);
                let expected = if canonical { BigRational::one() } else { BigRational::zero() };
                a.2.commutator(b.2) == expected
            })
        })
    }

    pub fn coefficient(&self, label: &str, q: Quadrature, input: &str, iq: Quadrature) -> Option<BigRational> {
        let (_, x, p) = self.modes.iter().find(|(l, _, _)| l == label)?;
        let row = if q == Quadrature::X { x } else { p };
        Some(row.coefficients.get(&symbol(input, iq)).cloned().unwrap_or_else(BigRational::zero))
    }
}

fn rational(value: f64, step: usize, what: &'static str) -> Result<BigRational, ExactError> {
    let err = ExactError::NotRational { step, what, value };
    let r = Rational64::approximate_float(value).ok_or_else(|| err.clone())?;
    let back = *r.numer() as f64 / *r.denom() as f64;
    if (back - value).abs() > 1e-15 * value.abs().max(1.0) {
        return Err(err);
    }
    Ok(BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
}

fn quarter(theta: f64, step: usize, what: &'static str) -> Result<(BigRational, BigRational), ExactError> {
    let (c, s) = cos_sin(theta);
    if c.abs().fract() != 0.0 || s.abs().fract() != 0.0 {
        return Err(ExactError::NotRational { step, what, value: theta });
    }
    let int = |v: f64| BigRational::from_integer(BigInt::from(v as i64));
    Ok((int(c), int(s)))
}

/// Exact propagation with outcomes substituted as they are used.
pub fn propagate_exact(program: &Program) -> Result<ExactTable, ExactError> {
    program.validate()?;
    let mut live: Vec<(String, ExactExpr, ExactExpr)> = program
        .modes
        .iter()
        .map(|m| (m.label.clone(), ExactExpr::initial(&m.label, Quadrature::X), ExactExpr::initial(&m.label, Quadrature::P)))
        .collect();
    let mut outcomes: Vec<(String, ExactExpr)> = Vec::new();
    let find = |live: &[(String, ExactExpr, ExactExpr)], l: &str| live.iter().position(|m| m.0 == l).expect("validated");

    for (i, step) in program.steps.iter().enumerate() {
        match step {
            Step::Squeeze { r, .. } => {
                // Only the identity squeezer is rational.
                if *r != 0.0 {
                    return Err(ExactError::NotRational { step: i, what: "squeeze r", value: *r });
                }
            }
            Step::Qnd { a, b, gain } => {
                let g = rational(*gain, i, "qnd gain")?;
                let (ia, ib) = (find(&live, a), find(&live, b));
                let (xa, xb) = (live[ia].1.clone(), live[ib].1.clone());
                live[ia].2.add_scaled(&xb, &g);
                live[ib].2.add_scaled(&xa, &g);
            }
            Step::Phase { mode, theta } => {
                let (c, s) = quarter(*theta, i, "phase")?;
                let k = find(&live, mode);
                let (x, p) = (live[k].1.clone(), live[k].2.clone());
                live[k].1 = ExactExpr::combine(&x, &c, &p, &s);
                live[k].2 = ExactExpr::combine(&x, &-s, &p, &c);
            }
            Step::Measure { mode, angle, id } => {
                let (c, s) = quarter(*angle, i, "measurement angle")?;
                let k = find(&live, mode);
                let (_, x, p) = live.remove(k);
                outcomes.push((id.clone(), ExactExpr::combine(&x, &c, &p, &s)));
            }
            Step::Displace { mode, quadrature, terms, .. } => {
                let k = find(&live, mode);
                for (id, g) in terms {
                    let g = rational(*g, i, "feedforward gain")?;
                    let o = outcomes.iter().find(|(o, _)| o == id).expect("validated").1.clone();
                    let target = if *quadrature == Quadrature::X { &mut live[k].1 } else { &mut live[k].2 };
                    target.add_scaled(&o, &g);
                }
            }
        }
    }
    Ok(ExactTable { modes: live, outcomes })
}
