use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use super::ast::{Basis, DeclKind, ProtocolAst, StepAst, Value};
use super::parser::check_value;
use super::{sorted, DiagCode, Diagnostic};
use crate::program::{ModeDecl, ModeKind, Program, Step};
use crate::spin_light::{frame_rotation, spin_to_mode, SpinEnsemble};

struct Ctx<'a> {
    bindings: &'a BTreeMap<String, f64>,
    diags: Vec<Diagnostic>,
}

impl Ctx<'_> {
    fn get(&mut self, v: &Value, slot: &str) -> f64 {
        let x = match v {
            Value::Lit(x, _) => *x,
            Value::Var(name, span) => match self.bindings.get(name) {
                Some(x) => *x,
                None => {
                    self.diags.push(Diagnostic::new(DiagCode::UnboundVariable, *span, format!("variable `${name}` is not bound")));
                    return 0.0;
                }
            },
        };
        if let Some(msg) = check_value(slot, x) {
            self.diags.push(Diagnostic::new(DiagCode::BadValue, v.span(), msg));
        }
        x
    }
}

/// Lowers a parsed script to a [`Program`], substituting `$variables` from
/// `bindings`.
pub fn compile(ast: &ProtocolAst, bindings: &BTreeMap<String, f64>) -> Result<Program, Vec<Diagnostic>> {
    let mut cx = Ctx { bindings, diags: Vec::new() };
    let mut spins = BTreeMap::new();
    let modes: Vec<ModeDecl> = ast
        .modes
        .iter()
        .map(|m| {
            let kind = match &m.kind {
                DeclKind::Vacuum => ModeKind::Vacuum,
                DeclKind::Spin { f, n } => {
                    let (f, n_atoms) = (cx.get(f, "F"), cx.get(n, "N"));
                    let ens = SpinEnsemble::x_polarized(&m.name.name, f, n_atoms);
                    if spin_to_mode(&ens).is_ok() {
                        spins.insert(m.name.name.clone(), ens);
                    }
                    ModeKind::Spin { f, n_atoms }
                }
                DeclKind::Light { n } => ModeKind::Light { n_photons: cx.get(n, "n") },
                DeclKind::Coherent { x, p } => ModeKind::Coherent { x: cx.get(x, "x"), p: cx.get(p, "p") },
            };
            ModeDecl { label: m.name.name.clone(), kind }
        })
        .collect();

    let mut steps = Vec::new();
    for s in &ast.steps {
        let step = match s {
            StepAst::Squeeze { a, b, r } => Step::Squeeze { a: a.name.clone(), b: b.name.clone(), r: cx.get(r, "r") },
            StepAst::Qnd { a, b, k } => Step::Qnd { a: a.name.clone(), b: b.name.clone(), gain: cx.get(k, "k") },
            StepAst::Phase { mode, theta } => Step::Phase { mode: mode.name.clone(), theta: cx.get(theta, "theta") },
            StepAst::Rotate { mode, axis, angle } => {
                let angle = cx.get(angle, "angle");
                let theta = match spins.get(&mode.name).map(|ens| frame_rotation(ens, *axis, angle)) {
                    Some(Ok(t)) => t,
                    Some(Err(e)) => {
                        cx.diags.push(Diagnostic::new(DiagCode::RotationAxis, mode.span, e.to_string()));
                        0.0
                    }
                    // Declaration already reported (bad F or N).
                    None => 0.0,
                };
                Step::Phase { mode: mode.name.clone(), theta }
            }
            StepAst::Measure { basis, mode, id } => {
                let angle = match basis {
                    Basis::X => 0.0,
                    Basis::P => FRAC_PI_2,
                    Basis::Angle(v) => cx.get(v, "angle"),
                };
                Step::Measure { mode: mode.name.clone(), angle, id: id.name.clone() }
            }
            StepAst::Displace { mode, quadrature, terms, constant } => Step::Displace {
                mode: mode.name.clone(),
                quadrature: *quadrature,
                terms: terms.iter().map(|(g, id)| (id.name.clone(), cx.get(g, "gain"))).collect(),
                constant: constant.as_ref().map_or(0.0, |c| cx.get(c, "const")),
            },
        };
        steps.push(step);
    }

    let program = Program {
        name: ast.name.clone().unwrap_or_else(|| "script".into()),
        description: ast.description.clone().unwrap_or_default(),
        modes,
        steps,
        io: ast.io.iter().map(|(i, o)| (i.name.clone(), o.name.clone())).collect(),
    };
    if cx.diags.is_empty() {
        if let Err(e) = program.validate() {
            // The parser enforces the same rules, so this only triggers on
            // hand-built ASTs.
            cx.diags.push(Diagnostic::new(DiagCode::SyntaxError, Default::default(), e.to_string()));
        }
    }
    if cx.diags.is_empty() {
        Ok(program)
    } else {
        Err(sorted(cx.diags))
    }
}
