use super::ast::{ProtocolAst, Span};
use super::{compile, parse, DiagCode, Diagnostic};
use crate::program::Program;
use crate::protocols::{ProtocolConfig, ProtocolError, ProtocolKind};

pub const BUILTIN_NAMES: [&str; 3] = ["atom_to_light", "atom_to_atom", "swap"];

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "atom_to_light" => include_str!("../../scripts/atom_to_light.qp"),
        "atom_to_atom" => include_str!("../../scripts/atom_to_atom.qp"),
        "swap" => include_str!("../../scripts/swap.qp"),
        _ => return None,
    })
}

/// Parsed built-in script, with `$r`, `$k`, `$ratio`-derived and `$ffN`
/// variables left unbound.
pub fn builtin(name: &str) -> Result<ProtocolAst, Diagnostic> {
    let text = source(name).ok_or_else(|| {
        Diagnostic::new(
            DiagCode::UnknownBuiltin,
            Span::default(),
            format!("unknown builtin `{name}` (expected one of {})", BUILTIN_NAMES.join(", ")),
        )
    })?;
    Ok(parse(text).expect("builtin scripts are valid"))
}

/// Compiles a built-in script with the variables of `cfg`.
pub fn compile_builtin(kind: ProtocolKind, cfg: &ProtocolConfig) -> Result<Program, ProtocolError> {
    cfg.validate()?;
    let vars = kind.bindings(cfg)?;
    let ast = builtin(kind.name()).expect("every protocol kind has a script");
    compile(&ast, &vars).map_err(|d| {
        let msgs: Vec<String> = d.iter().map(ToString::to_string).collect();
        ProtocolError::InvalidConfig(msgs.join("; "))
    })
}
