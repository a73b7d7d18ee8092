use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;

/// Source location of a syntax element.
///
/// Spans never take part in structural equality or hashing: two AST nodes
/// that differ only in where they were parsed from compare equal.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub offset: u32,
    pub len: u32,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(offset: usize, len: usize, line: usize, column: usize) -> Span {
        Span { offset: offset as u32, len: len as u32, line: line as u32, column: column as u32 }
    }

    pub fn end(&self) -> usize {
        (self.offset + self.len) as usize
    }

    /// `self` unless it is empty.
    pub fn or(self, other: Span) -> Span {
        if self.len == 0 {
            other
        } else {
            self
        }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        if other.end() <= self.offset as usize {
            return self;
        }
        Span { len: (other.end() - self.offset as usize) as u32, ..self }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

/// Stable short identifiers for every diagnostic the toolchain emits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Code {
    // syntax
    UnexpectedToken,
    InvalidCharacter,
    ReservedKeyword,
    InvalidName,
    UnterminatedStatement,
    DuplicateDefinition,
    MissingDefault,
    DuplicateDefault,
    // implicit definitions
    MissingPlayerType,
    MissingScoreType,
    MismatchedBuiltin,
    // static semantics
    UnknownAlias,
    RecursiveAlias,
    ArrowSourceNotSet,
    EmptySetType,
    DuplicateSymbol,
    UnknownName,
    AccessOnSetType,
    KeyTypeMismatch,
    CastTypeMismatch,
    IncomparableTypes,
    TypeMismatch,
    AssignToNonVariable,
    AnyAssignNotSet,
    VarTagNotSet,
    DuplicateKey,
    ValueTypeMismatch,
    RecursiveConstant,
    MissingBegin,
    MissingEnd,
    ReachabilityImpossible,
    RecursiveReachability,
    EndWithoutKeeper,
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: Code, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Error, code, message: message.into(), span }
    }

    pub fn warning(code: Code, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, code, message: message.into(), span }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {level}[{}]: {}", self.span.line, self.span.column, self.code, self.message)
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}
