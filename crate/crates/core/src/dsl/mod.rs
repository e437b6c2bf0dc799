//! Line-oriented protocol scripts (`.qp`).
//!
//! ```text
//! protocol NAME
//! description free text
//! mode NAME (vacuum | spin F=NUM N=NUM | light n=NUM | coherent x=NUM p=NUM)
//! io NAME -> NAME
//! squeeze NAME NAME r=NUM
//! qnd NAME NAME k=NUM
//! phase NAME theta=NUM
//! rotate NAME (x|y|z) angle=NUM
//! measure (x|p|angle=NUM) NAME -> NAME
//! displace NAME (x|p) {gain=NUM from=NAME} [const=NUM]
//! ```
//!
//! `#` starts a comment. `NUM` is a decimal or exponent literal, or `$name`
//! for a variable bound at compile time.

mod ast;
mod builtins;
mod compile;
mod parser;
mod printer;

use std::fmt;

use serde::Serialize;

pub use ast::{Basis, DeclKind, Ident, ModeDeclAst, ProtocolAst, Span, StepAst, Value};
pub use builtins::{builtin, compile_builtin, BUILTIN_NAMES};
pub use compile::compile;
pub use parser::{parse, parse_bytes};
pub use printer::print;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagCode {
    SyntaxError,
    BadNumber,
    UndeclaredMode,
    UseAfterMeasure,
    ForwardOutcome,
    UndefinedOutcome,
    DuplicateMode,
    DuplicateOutcome,
    DuplicateIo,
    SameMode,
    NotASpin,
    RotationAxis,
    OutputMeasured,
    UnboundVariable,
    BadValue,
    UnknownBuiltin,
    InvalidUtf8,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::SyntaxError => "SYNTAX_ERROR",
            DiagCode::BadNumber => "BAD_NUMBER",
            DiagCode::UndeclaredMode => "UNDECLARED_MODE",
            DiagCode::UseAfterMeasure => "USE_AFTER_MEASURE",
            DiagCode::ForwardOutcome => "FORWARD_OUTCOME",
            DiagCode::UndefinedOutcome => "UNDEFINED_OUTCOME",
            DiagCode::DuplicateMode => "DUPLICATE_MODE",
            DiagCode::DuplicateOutcome => "DUPLICATE_OUTCOME",
            DiagCode::DuplicateIo => "DUPLICATE_IO",
            DiagCode::SameMode => "SAME_MODE",
            DiagCode::NotASpin => "NOT_A_SPIN",
            DiagCode::RotationAxis => "ROTATION_AXIS",
            DiagCode::OutputMeasured => "OUTPUT_MEASURED",
            DiagCode::UnboundVariable => "UNBOUND_VARIABLE",
            DiagCode::BadValue => "BAD_VALUE",
            DiagCode::UnknownBuiltin => "UNKNOWN_BUILTIN",
            DiagCode::InvalidUtf8 => "INVALID_UTF8",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A positioned error; line and column are 1-based (0 when not tied to a
/// source position).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: DiagCode, span: Span, message: impl Into<String>) -> Self {
        Self { code, line: span.line, col: span.col, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.code, self.message)
    }
}

fn sorted(mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    diags.sort_by_key(|d| (d.line, d.col, d.code));
    diags.dedup();
    diags
}
