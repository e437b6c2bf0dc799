use crate::program::Quadrature;
use crate::spin_light::Axis;

/// Source position. Spans never affect equality, so ASTs compare by
/// structure only.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Lit(f64, Span),
    Var(String, Span),
}

impl Value {
    pub fn span(&self) -> Span {
        match self {
            Value::Lit(_, s) | Value::Var(_, s) => *s,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeclKind {
    Vacuum,
    Spin { f: Value, n: Value },
    Light { n: Value },
    Coherent { x: Value, p: Value },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeDeclAst {
    pub name: Ident,
    pub kind: DeclKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    X,
    P,
    Angle(Value),
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepAst {
    Squeeze { a: Ident, b: Ident, r: Value },
    Qnd { a: Ident, b: Ident, k: Value },
    Phase { mode: Ident, theta: Value },
    Rotate { mode: Ident, axis: Axis, angle: Value },
    Measure { basis: Basis, mode: Ident, id: Ident },
    Displace { mode: Ident, quadrature: Quadrature, terms: Vec<(Value, Ident)>, constant: Option<Value> },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProtocolAst {
    pub name: Option<String>,
    pub description: Option<String>,
    pub modes: Vec<ModeDeclAst>,
    pub io: Vec<(Ident, Ident)>,
    pub steps: Vec<StepAst>,
}
