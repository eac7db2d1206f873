//! The mini-language: parsing, validation, lowering and control flow.
//!
//! ```text
//! input x: real in [0, 10];
//! input d: int in [1, 31];
//! fn helper(a) { let r = a; if (a < 0) { r = -a; } return r; }
//! let y = helper(x) * 2;
//! for (let i = 0; i < 3; i = i + 1) { y = y + i; }
//! if (y >= 4.5 && d == 20) { reach("label"); }
//! ```

mod ast;
mod cfg;
mod error;
mod ir;
mod lexer;
mod parser;

pub use ast::{
    BinOp, Builtin, CmpOp, Cond, Expr, FnDecl, InputDecl, ScalarKind, SourceProgram, Stmt,
};
pub use cfg::{BasicBlock, Cfg, Edge, EdgeKind, NodeId, Op, Terminator};
pub use error::{ParseError, ParseErrorKind};
pub use ir::{lower, BranchSite, IrCond, IrExpr, IrStmt, Program};
pub use parser::parse;

/// Lowers a validated program and returns its control-flow graph.
pub fn lower_to_cfg(prog: &SourceProgram) -> Cfg {
    lower(prog).cfg
}

/// Parses and lowers in one step.
pub fn compile(text: &str) -> Result<Program, ParseError> {
    parse(text).map(|p| lower(&p))
}
