use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("use of undeclared variable `{0}`")]
    UseBeforeDeclare(String),
    #[error("variable `{0}` is already declared in this scope")]
    Redeclared(String),
    #[error("duplicate reach label {0:?}")]
    DuplicateReachLabel(String),
    #[error("input `{name}` must have finite bounds with lo <= hi, got [{lo}, {hi}]")]
    UnboundedInput { name: String, lo: f64, hi: f64 },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("function `{0}` is recursive and cannot be inlined")]
    Recursive(String),
    #[error("duplicate definition of `{0}`")]
    DuplicateDefinition(String),
    #[error("reach markers are only allowed in the program body")]
    ReachInFunction,
    #[error("call to helper `{0}` is not allowed here; bind it with `let` first")]
    CallPosition(String),
}

/// A diagnostic anchored at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, col: usize, kind: ParseErrorKind) -> Self {
        Self { line, col, kind }
    }
}
