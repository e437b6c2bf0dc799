use std::collections::{HashMap, HashSet};

use super::ast::{Basis, DeclKind, Ident, ModeDeclAst, ProtocolAst, Span, StepAst, Value};
use super::{sorted, DiagCode, Diagnostic};
use crate::program::Quadrature;
use crate::spin_light::Axis;

type PResult<T> = Result<T, Diagnostic>;

struct Line<'a> {
    no: usize,
    text: &'a str,
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    end: usize,
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Decimal or exponent literal: `[+-]? (d+ [. d*] | . d+) ([eE] [+-]? d+)?`.
fn is_number(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

impl<'a> Line<'a> {
    fn new(no: usize, text: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut start: Option<(usize, usize)> = None;
        let mut col = 0;
        for (byte, ch) in text.char_indices() {
            col += 1;
            if ch.is_whitespace() {
                if let Some((b, c)) = start.take() {
                    toks.push((c, &text[b..byte]));
                }
            } else if start.is_none() {
                start = Some((byte, col));
            }
        }
        if let Some((b, c)) = start {
            toks.push((c, &text[b..]));
        }
        Self { no, text, toks, pos: 0, end: col + 1 }
    }

    fn span(&self, col: usize) -> Span {
        Span { line: self.no, col }
    }

    fn here(&self) -> Span {
        self.span(self.toks.get(self.pos).map_or(self.end, |t| t.0))
    }

    fn err(&self, code: DiagCode, span: Span, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(code, span, msg)
    }

    fn word(&mut self, what: &str) -> PResult<(Span, &'a str)> {
        match self.toks.get(self.pos) {
            Some(&(c, t)) => {
                self.pos += 1;
                Ok((self.span(c), t))
            }
            None => Err(self.err(DiagCode::SyntaxError, self.here(), format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        let (span, t) = self.word(&format!("`{kw}`"))?;
        if t == kw {
            Ok(())
        } else {
            Err(self.err(DiagCode::SyntaxError, span, format!("expected `{kw}`, found `{t}`")))
        }
    }

    fn name(&mut self, what: &str) -> PResult<Ident> {
        let (span, t) = self.word(what)?;
        if is_name(t) {
            Ok(Ident { name: t.to_string(), span })
        } else {
            Err(self.err(DiagCode::SyntaxError, span, format!("expected {what}, found `{t}`")))
        }
    }

    fn value(&self, text: &str, span: Span) -> PResult<Value> {
        if let Some(var) = text.strip_prefix('$') {
            return if is_name(var) {
                Ok(Value::Var(var.to_string(), span))
            } else {
                Err(self.err(DiagCode::BadNumber, span, format!("`{text}` is not a valid variable")))
            };
        }
        if !is_number(text) {
            return Err(self.err(DiagCode::BadNumber, span, format!("`{text}` is not a number")));
        }
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Lit(v, span)),
            _ => Err(self.err(DiagCode::BadNumber, span, format!("`{text}` is out of range"))),
        }
    }

    fn keyval(&mut self, key: &str) -> PResult<Value> {
        let (span, t) = self.word(&format!("`{key}=`"))?;
        match t.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            Some(v) => {
                let vspan = Span { line: span.line, col: span.col + key.chars().count() + 1 };
                if v.is_empty() {
                    return Err(self.err(DiagCode::BadNumber, vspan, format!("missing value after `{key}=`")));
                }
                self.value(v, vspan)
            }
            None => Err(self.err(DiagCode::SyntaxError, span, format!("expected `{key}=`, found `{t}`"))),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn finish(&self) -> PResult<()> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(&(c, t)) => Err(self.err(DiagCode::SyntaxError, self.span(c), format!("unexpected `{t}`"))),
        }
    }

    /// Text after the leading keyword, trimmed.
    fn rest(&self) -> String {
        let after = self.toks.get(1).map(|&(c, _)| c);
        match after {
            None => String::new(),
            Some(col) => self.text.chars().skip(col - 1).collect::<String>().trim().to_string(),
        }
    }
}

enum Stmt {
    Name(Span, String),
    Description(Span, String),
    Decl(ModeDeclAst),
    Io(Ident, Ident),
    Step(StepAst),
}

fn parse_line(line: &mut Line<'_>) -> PResult<Option<Stmt>> {
    let Some((span, head)) = line.toks.first().map(|&(c, t)| (line.span(c), t)) else {
        return Ok(None);
    };
    line.pos = 1;
    let stmt = match head {
        "protocol" => {
            let n = line.name("protocol name")?;
            Stmt::Name(span, n.name)
        }
        "description" => return Ok(Some(Stmt::Description(span, line.rest()))),
        "mode" => {
            let name = line.name("mode name")?;
            let (kspan, kind) = line.word("mode kind")?;
            let kind = match kind {
                "vacuum" => DeclKind::Vacuum,
                "spin" => DeclKind::Spin { f: line.keyval("F")?, n: line.keyval("N")? },
                "light" => DeclKind::Light { n: line.keyval("n")? },
                "coherent" => DeclKind::Coherent { x: line.keyval("x")?, p: line.keyval("p")? },
                other => {
                    return Err(line.err(
                        DiagCode::SyntaxError,
                        kspan,
                        format!("unknown mode kind `{other}` (expected vacuum, spin, light or coherent)"),
                    ))
                }
            };
            Stmt::Decl(ModeDeclAst { name, kind })
        }
        "io" => {
            let input = line.name("input mode")?;
            line.keyword("->")?;
            let output = line.name("output mode")?;
            Stmt::Io(input, output)
        }
        "squeeze" => Stmt::Step(StepAst::Squeeze { a: line.name("mode")?, b: line.name("mode")?, r: line.keyval("r")? }),
        "qnd" => Stmt::Step(StepAst::Qnd { a: line.name("mode")?, b: line.name("mode")?, k: line.keyval("k")? }),
        "phase" => Stmt::Step(StepAst::Phase { mode: line.name("mode")?, theta: line.keyval("theta")? }),
        "rotate" => {
            let mode = line.name("mode")?;
            let (aspan, a) = line.word("rotation axis")?;
            let axis = match a {
                "x" => Axis::X,
                "y" => Axis::Y,
                "z" => Axis::Z,
                other => return Err(line.err(DiagCode::SyntaxError, aspan, format!("expected axis x, y or z, found `{other}`"))),
            };
            Stmt::Step(StepAst::Rotate { mode, axis, angle: line.keyval("angle")? })
        }
        "measure" => {
            let basis = match line.peek() {
                Some("x") => {
                    line.pos += 1;
                    Basis::X
                }
                Some("p") => {
                    line.pos += 1;
                    Basis::P
                }
                _ => Basis::Angle(line.keyval("angle")?),
            };
            let mode = line.name("mode")?;
            line.keyword("->")?;
            let id = line.name("outcome name")?;
            Stmt::Step(StepAst::Measure { basis, mode, id })
        }
        "displace" => {
            let mode = line.name("mode")?;
            let (qspan, q) = line.word("quadrature")?;
            let quadrature = match q {
                "x" => Quadrature::X,
                "p" => Quadrature::P,
                other => return Err(line.err(DiagCode::SyntaxError, qspan, format!("expected quadrature x or p, found `{other}`"))),
            };
            let mut terms = Vec::new();
            while line.peek().is_some_and(|t| t.starts_with("gain=")) {
                let g = line.keyval("gain")?;
                let (fspan, f) = line.word("`from=`")?;
                let id = match f.strip_prefix("from=") {
                    Some(id) if is_name(id) => Ident { name: id.to_string(), span: Span { line: fspan.line, col: fspan.col + 5 } },
                    _ => return Err(line.err(DiagCode::SyntaxError, fspan, format!("expected `from=NAME`, found `{f}`"))),
                };
                terms.push((g, id));
            }
            let constant = if line.peek().is_some() { Some(line.keyval("const")?) } else { None };
            Stmt::Step(StepAst::Displace { mode, quadrature, terms, constant })
        }
        other => return Err(line.err(DiagCode::SyntaxError, span, format!("unknown statement `{other}`"))),
    };
    line.finish()?;
    Ok(Some(stmt))
}

#[derive(Default)]
struct Scope {
    /// Mode name → (is a spin, measured).
    modes: HashMap<String, (bool, bool)>,
    outcomes: HashSet<String>,
    /// Outcome name → line of its definition, for forward-reference errors.
    all_outcomes: HashMap<String, usize>,
    diags: Vec<Diagnostic>,
}

impl Scope {
    fn diag(&mut self, code: DiagCode, span: Span, msg: String) {
        self.diags.push(Diagnostic::new(code, span, msg));
    }

    /// Checks that a mode can be used; returns whether it is a spin.
    fn use_mode(&mut self, m: &Ident) -> Option<bool> {
        match self.modes.get(&m.name) {
            None => {
                self.diag(DiagCode::UndeclaredMode, m.span, format!("mode `{}` is not declared", m.name));
                None
            }
            Some(&(_, true)) => {
                self.diag(DiagCode::UseAfterMeasure, m.span, format!("mode `{}` was already measured", m.name));
                None
            }
            Some(&(spin, false)) => Some(spin),
        }
    }

    fn pair(&mut self, a: &Ident, b: &Ident) {
        self.use_mode(a);
        self.use_mode(b);
        if a.name == b.name {
            self.diag(DiagCode::SameMode, b.span, format!("two-mode gate applied to `{}` twice", a.name));
        }
    }

    fn step(&mut self, step: &StepAst) {
        match step {
            StepAst::Squeeze { a, b, .. } | StepAst::Qnd { a, b, .. } => self.pair(a, b),
            StepAst::Phase { mode, .. } => {
                self.use_mode(mode);
            }
            StepAst::Rotate { mode, axis, .. } => {
                if let Some(spin) = self.use_mode(mode) {
                    if !spin {
                        self.diag(DiagCode::NotASpin, mode.span, format!("`{}` is not a spin ensemble", mode.name));
                    } else if *axis != Axis::X {
                        self.diag(
                            DiagCode::RotationAxis,
                            mode.span,
                            format!("spins are x-polarized; rotation about {axis} leaves the tangent plane"),
                        );
                    }
                }
            }
            StepAst::Measure { mode, id, .. } => {
                if self.use_mode(mode).is_some() {
                    self.modes.get_mut(&mode.name).expect("checked").1 = true;
                }
                if !self.outcomes.insert(id.name.clone()) {
                    self.diag(DiagCode::DuplicateOutcome, id.span, format!("outcome `{}` is already defined", id.name));
                }
            }
            StepAst::Displace { mode, terms, .. } => {
                self.use_mode(mode);
                for (_, id) in terms {
                    if self.outcomes.contains(&id.name) {
                        continue;
                    }
                    match self.all_outcomes.get(&id.name) {
                        Some(line) => self.diag(
                            DiagCode::ForwardOutcome,
                            id.span,
                            format!("outcome `{}` is only measured later (line {line})", id.name),
                        ),
                        None => self.diag(DiagCode::UndefinedOutcome, id.span, format!("outcome `{}` is never measured", id.name)),
                    }
                }
            }
        }
    }
}

/// Checks a literal against the constraints of its slot.
pub(super) fn check_value(slot: &str, v: f64) -> Option<String> {
    let ok = match slot {
        "F" => crate::spin_light::check_half_integer(v).is_ok(),
        "N" => v >= 1.0,
        "n" => v > 0.0,
        _ => true,
    };
    (!ok || !v.is_finite()).then(|| match slot {
        "F" => format!("spin F must be a positive half-integer, got {v}"),
        "N" => format!("atom count N must be at least 1, got {v}"),
        "n" => format!("photon number n must be positive, got {v}"),
        _ => format!("value {v} is not finite"),
    })
}

fn literal_checks(decl: &ModeDeclAst, diags: &mut Vec<Diagnostic>) {
    let slots: Vec<(&str, &Value)> = match &decl.kind {
        DeclKind::Spin { f, n } => vec![("F", f), ("N", n)],
        DeclKind::Light { n } => vec![("n", n)],
        _ => vec![],
    };
    for (slot, v) in slots {
        if let Value::Lit(x, span) = v {
            if let Some(msg) = check_value(slot, *x) {
                diags.push(Diagnostic::new(DiagCode::BadValue, *span, msg));
            }
        }
    }
}

/// Parses and validates a script. Every failure is reported as a
/// diagnostic, sorted by position.
pub fn parse(text: &str) -> Result<ProtocolAst, Vec<Diagnostic>> {
    let normalized = text.replace("\r\n", "\n");
    let mut stmts = Vec::new();
    let mut diags = Vec::new();
    for (i, raw) in normalized.split(['\n', '\r']).enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut line = Line::new(i + 1, content);
        match parse_line(&mut line) {
            Ok(Some(s)) => stmts.push(s),
            Ok(None) => {}
            Err(d) => diags.push(d),
        }
    }

    let mut ast = ProtocolAst::default();
    let mut scope = Scope::default();
    for s in &stmts {
        if let Stmt::Step(StepAst::Measure { id, .. }) = s {
            scope.all_outcomes.entry(id.name.clone()).or_insert(id.span.line);
        }
    }
    let mut io_lines = Vec::new();
    for s in stmts {
        match s {
            Stmt::Name(span, n) => {
                if ast.name.replace(n).is_some() {
                    scope.diag(DiagCode::SyntaxError, span, "protocol name given twice".into());
                }
            }
            Stmt::Description(span, d) => {
                if ast.description.replace(d).is_some() {
                    scope.diag(DiagCode::SyntaxError, span, "description given twice".into());
                }
            }
            Stmt::Decl(d) => {
                literal_checks(&d, &mut scope.diags);
                if scope.modes.contains_key(&d.name.name) {
                    scope.diag(DiagCode::DuplicateMode, d.name.span, format!("mode `{}` is already declared", d.name.name));
                } else {
                    scope.modes.insert(d.name.name.clone(), (matches!(d.kind, DeclKind::Spin { .. }), false));
                }
                ast.modes.push(d);
            }
            Stmt::Io(i, o) => io_lines.push((i, o)),
            Stmt::Step(step) => {
                scope.step(&step);
                ast.steps.push(step);
            }
        }
    }
    let (mut ins, mut outs) = (HashSet::new(), HashSet::new());
    for (i, o) in &io_lines {
        for m in [i, o] {
            if !scope.modes.contains_key(&m.name) {
                scope.diag(DiagCode::UndeclaredMode, m.span, format!("mode `{}` is not declared", m.name));
            }
        }
        if scope.modes.get(&o.name).is_some_and(|m| m.1) {
            scope.diag(DiagCode::OutputMeasured, o.span, format!("output mode `{}` is measured", o.name));
        }
        if !ins.insert(i.name.clone()) {
            scope.diag(DiagCode::DuplicateIo, i.span, format!("`{}` is already an input", i.name));
        }
        if !outs.insert(o.name.clone()) {
            scope.diag(DiagCode::DuplicateIo, o.span, format!("`{}` is already an output", o.name));
        }
    }
    ast.io = io_lines;
    diags.extend(scope.diags);
    if diags.is_empty() {
        Ok(ast)
    } else {
        Err(sorted(diags))
    }
}

/// [`parse`] for raw bytes; invalid UTF-8 is a diagnostic.
pub fn parse_bytes(bytes: &[u8]) -> Result<ProtocolAst, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
            let line_start = valid.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            let col = String::from_utf8_lossy(&valid[line_start..]).chars().count() + 1;
            Err(vec![Diagnostic::new(DiagCode::InvalidUtf8, Span { line, col }, "script is not valid UTF-8")])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_grammar() {
        for ok in ["1", "-2.5", "+.5", "3.", "1e-3", "6.02E+23"] {
            assert!(is_number(ok), "{ok}");
        }
        for bad in ["", ".", "e5", "1e", "inf", "NaN", "1.2.3", "--1", "0x10"] {
            assert!(!is_number(bad), "{bad}");
        }
    }

    #[test]
    fn columns_count_characters() {
        let l = Line::new(1, "  qnd  αβ c");
        assert_eq!(l.toks, vec![(3, "qnd"), (8, "αβ"), (11, "c")]);
    }
}
