use std::fmt::Write;

use super::ast::{Basis, DeclKind, ProtocolAst, StepAst, Value};

fn val(v: &Value) -> String {
    match v {
        Value::Lit(x, _) => format!("{x:?}"),
        Value::Var(name, _) => format!("${name}"),
    }
}

/// Canonical text of a script; [`parse`](super::parse) reads it back to an
/// equal AST.
pub fn print(ast: &ProtocolAst) -> String {
    let mut out = String::new();
    if let Some(n) = &ast.name {
        let _ = writeln!(out, "protocol {n}");
    }
    if let Some(d) = ast.description.as_deref().filter(|d| !d.is_empty()) {
        let _ = writeln!(out, "description {d}");
    }
    for m in &ast.modes {
        let kind = match &m.kind {
            DeclKind::Vacuum => "vacuum".to_string(),
            DeclKind::Spin { f, n } => format!("spin F={} N={}", val(f), val(n)),
            DeclKind::Light { n } => format!("light n={}", val(n)),
            DeclKind::Coherent { x, p } => format!("coherent x={} p={}", val(x), val(p)),
        };
        let _ = writeln!(out, "mode {} {kind}", m.name.name);
    }
    for (i, o) in &ast.io {
        let _ = writeln!(out, "io {} -> {}", i.name, o.name);
    }
    for s in &ast.steps {
        let line = match s {
            StepAst::Squeeze { a, b, r } => format!("squeeze {} {} r={}", a.name, b.name, val(r)),
            StepAst::Qnd { a, b, k } => format!("qnd {} {} k={}", a.name, b.name, val(k)),
            StepAst::Phase { mode, theta } => format!("phase {} theta={}", mode.name, val(theta)),
            StepAst::Rotate { mode, axis, angle } => format!("rotate {} {axis} angle={}", mode.name, val(angle)),
            StepAst::Measure { basis, mode, id } => {
                let b = match basis {
                    Basis::X => "x".to_string(),
                    Basis::P => "p".to_string(),
                    Basis::Angle(v) => format!("angle={}", val(v)),
                };
                format!("measure {b} {} -> {}", mode.name, id.name)
            }
            StepAst::Displace { mode, quadrature, terms, constant } => {
                let mut l = format!("displace {} {}", mode.name, quadrature.name());
                for (g, id) in terms {
                    let _ = write!(l, " gain={} from={}", val(g), id.name);
                }
                if let Some(c) = constant {
                    let _ = write!(l, " const={}", val(c));
                }
                l
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}
