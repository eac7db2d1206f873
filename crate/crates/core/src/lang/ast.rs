//! Surface syntax tree of the mini-language and its canonical printer.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Declared kind of a program input.
///
/// Integer inputs are searched as reals and floored when the program starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Real,
    Int,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub name: String,
    pub kind: ScalarKind,
    pub lo: f64,
    pub hi: f64,
}

/// The six comparators a branch site may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
        CmpOp::Eq,
        CmpOp::Ne,
    ];

    /// IEEE-754 comparison: every comparator except `!=` is false on NaN.
    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }

    /// The comparator that holds exactly when `self` does not (on non-NaN operands).
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// The fixed set of library functions a program may call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sin,
    Cos,
    Tan,
    Fabs,
    Floor,
    Ceil,
    Sqrt,
    Exp,
    Log,
    Pow,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "tan" => Builtin::Tan,
            "fabs" => Builtin::Fabs,
            "floor" => Builtin::Floor,
            "ceil" => Builtin::Ceil,
            "sqrt" => Builtin::Sqrt,
            "exp" => Builtin::Exp,
            "log" => Builtin::Log,
            "pow" => Builtin::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Tan => "tan",
            Builtin::Fabs => "fabs",
            Builtin::Floor => "floor",
            Builtin::Ceil => "ceil",
            Builtin::Sqrt => "sqrt",
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Pow => 2,
            _ => 1,
        }
    }

    /// Evaluates with libm semantics; domain errors yield NaN rather than trapping.
    pub fn apply(self, args: &[f64]) -> f64 {
        let a = args[0];
        match self {
            Builtin::Sin => a.sin(),
            Builtin::Cos => a.cos(),
            Builtin::Tan => a.tan(),
            Builtin::Fabs => a.abs(),
            Builtin::Floor => a.floor(),
            Builtin::Ceil => a.ceil(),
            Builtin::Sqrt => a.sqrt(),
            Builtin::Exp => a.exp(),
            Builtin::Log => a.ln(),
            Builtin::Pow => a.powf(args[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Literals are always non-negative; a leading minus parses as [`Expr::Neg`].
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp(CmpOp, Expr, Expr),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Cond {
    /// Number of comparisons, i.e. branch sites this condition lowers to.
    pub fn comparisons(&self) -> usize {
        match self {
            Cond::Cmp(..) => 1,
            Cond::Not(c) => c.comparisons(),
            Cond::And(a, b) | Cond::Or(a, b) => a.comparisons() + b.comparisons(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let(String, Expr),
    Assign(String, Expr),
    If {
        cond: Cond,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    While {
        cond: Cond,
        body: Vec<Stmt>,
    },
    For {
        init: Box<Stmt>,
        cond: Cond,
        step: Box<Stmt>,
        body: Vec<Stmt>,
    },
    Reach(String),
}

/// A helper function; calls to it are inlined during lowering.
#[derive(Debug, Clone, PartialEq)]
pub struct FnDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub ret: Expr,
}

/// A parsed and validated program.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceProgram {
    pub inputs: Vec<InputDecl>,
    pub functions: Vec<FnDecl>,
    pub body: Vec<Stmt>,
    /// Reach labels in order of appearance.
    pub targets: Vec<String>,
}

impl SourceProgram {
    pub fn function(&self, name: &str) -> Option<&FnDecl> {
        self.functions.iter().find(|f| f.name == name)
    }
}

// Printing. Binary expressions and compound conditions are fully
// parenthesized so the output re-parses to the same tree.

fn fmt_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    write!(f, "{v:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => fmt_num(f, *v),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(e) => write!(f, "-{e}"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Cmp(op, a, b) => write!(f, "{a} {op} {b}"),
            Cond::Not(c) => write!(f, "!({c})"),
            Cond::And(a, b) => write!(f, "({a}) && ({b})"),
            Cond::Or(a, b) => write!(f, "({a}) || ({b})"),
        }
    }
}

fn indent(f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
    for _ in 0..depth {
        f.write_str("    ")?;
    }
    Ok(())
}

fn fmt_simple(f: &mut fmt::Formatter<'_>, stmt: &Stmt) -> fmt::Result {
    match stmt {
        Stmt::Let(name, e) => write!(f, "let {name} = {e}"),
        Stmt::Assign(name, e) => write!(f, "{name} = {e}"),
        _ => unreachable!("for-loop init/step must be an assignment"),
    }
}

fn fmt_block(f: &mut fmt::Formatter<'_>, stmts: &[Stmt], depth: usize) -> fmt::Result {
    for s in stmts {
        fmt_stmt(f, s, depth)?;
    }
    Ok(())
}

fn fmt_stmt(f: &mut fmt::Formatter<'_>, stmt: &Stmt, depth: usize) -> fmt::Result {
    indent(f, depth)?;
    match stmt {
        Stmt::Let(..) | Stmt::Assign(..) => {
            fmt_simple(f, stmt)?;
            f.write_str(";\n")
        }
        Stmt::If { cond, then, els } => {
            writeln!(f, "if ({cond}) {{")?;
            fmt_block(f, then, depth + 1)?;
            indent(f, depth)?;
            if els.is_empty() {
                f.write_str("}\n")
            } else {
                f.write_str("} else {\n")?;
                fmt_block(f, els, depth + 1)?;
                indent(f, depth)?;
                f.write_str("}\n")
            }
        }
        Stmt::While { cond, body } => {
            writeln!(f, "while ({cond}) {{")?;
            fmt_block(f, body, depth + 1)?;
            indent(f, depth)?;
            f.write_str("}\n")
        }
        Stmt::For {
            init,
            cond,
            step,
            body,
        } => {
            f.write_str("for (")?;
            fmt_simple(f, init)?;
            write!(f, "; {cond}; ")?;
            fmt_simple(f, step)?;
            f.write_str(") {\n")?;
            fmt_block(f, body, depth + 1)?;
            indent(f, depth)?;
            f.write_str("}\n")
        }
        Stmt::Reach(label) => writeln!(f, "reach({label:?});"),
    }
}

impl fmt::Display for SourceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for input in &self.inputs {
            let kind = match input.kind {
                ScalarKind::Real => "real",
                ScalarKind::Int => "int",
            };
            writeln!(
                f,
                "input {}: {kind} in [{:?}, {:?}];",
                input.name, input.lo, input.hi
            )?;
        }
        for func in &self.functions {
            writeln!(f, "fn {}({}) {{", func.name, func.params.join(", "))?;
            fmt_block(f, &func.body, 1)?;
            writeln!(f, "    return {};", func.ret)?;
            f.write_str("}\n")?;
        }
        fmt_block(f, &self.body, 0)
    }
}
