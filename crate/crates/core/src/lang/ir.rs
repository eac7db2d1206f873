//! Lowered program: helpers inlined, variables resolved to slots, and every
//! comparison turned into a uniquely labeled [`BranchSite`].

use std::collections::HashMap;

use super::ast::*;
use super::cfg::Cfg;

#[derive(Debug, Clone, PartialEq)]
pub enum IrExpr {
    Const(f64),
    Slot(usize),
    Neg(Box<IrExpr>),
    Bin(BinOp, Box<IrExpr>, Box<IrExpr>),
    Call(Builtin, Vec<IrExpr>),
}

/// Short-circuit condition tree whose leaves are branch-site labels.
#[derive(Debug, Clone, PartialEq)]
pub enum IrCond {
    Site(usize),
    Not(Box<IrCond>),
    And(Box<IrCond>, Box<IrCond>),
    Or(Box<IrCond>, Box<IrCond>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum IrStmt {
    Assign(usize, IrExpr),
    If {
        cond: IrCond,
        then: Vec<IrStmt>,
        els: Vec<IrStmt>,
    },
    While {
        cond: IrCond,
        body: Vec<IrStmt>,
    },
    /// Index into [`Program::targets`].
    Reach(usize),
}

/// One comparison in the lowered program.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSite {
    /// Dense, assigned in source order after inlining.
    pub label: usize,
    pub op: CmpOp,
    pub lhs: IrExpr,
    pub rhs: IrExpr,
    /// Loop header or lexically inside a loop body.
    pub in_loop: bool,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub inputs: Vec<InputDecl>,
    /// Inputs occupy slots `0..inputs.len()`.
    pub slot_count: usize,
    pub body: Vec<IrStmt>,
    pub sites: Vec<BranchSite>,
    pub targets: Vec<String>,
    pub target_in_loop: Vec<bool>,
    pub cfg: Cfg,
}

impl Program {
    pub fn target_index(&self, label: &str) -> Option<usize> {
        self.targets.iter().position(|t| t == label)
    }

    pub fn dimension(&self) -> usize {
        self.inputs.len()
    }

    /// Every numeric literal, in order of first appearance.
    pub fn constants(&self) -> Vec<f64> {
        fn expr(e: &IrExpr, out: &mut Vec<f64>) {
            match e {
                IrExpr::Const(v) => {
                    if !out.iter().any(|o| o.to_bits() == v.to_bits()) {
                        out.push(*v)
                    }
                }
                IrExpr::Slot(_) => {}
                IrExpr::Neg(a) => {
                    // a negated literal is a constant of the program too
                    if let IrExpr::Const(v) = **a {
                        let n = -v;
                        if !out.iter().any(|o| o.to_bits() == n.to_bits()) {
                            out.push(n)
                        }
                    }
                    expr(a, out)
                }
                IrExpr::Bin(_, a, b) => {
                    expr(a, out);
                    expr(b, out)
                }
                IrExpr::Call(_, args) => args.iter().for_each(|a| expr(a, out)),
            }
        }
        fn stmts(ss: &[IrStmt], out: &mut Vec<f64>) {
            for s in ss {
                match s {
                    IrStmt::Assign(_, e) => expr(e, out),
                    IrStmt::If { then, els, .. } => {
                        stmts(then, out);
                        stmts(els, out)
                    }
                    IrStmt::While { body, .. } => stmts(body, out),
                    IrStmt::Reach(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        for site in &self.sites {
            expr(&site.lhs, &mut out);
            expr(&site.rhs, &mut out);
        }
        stmts(&self.body, &mut out);
        out
    }
}

/// Lowers a validated program. Total on the output of [`super::parse`].
pub fn lower(src: &SourceProgram) -> Program {
    let mut lw = Lowerer {
        src,
        slot_count: src.inputs.len(),
        scopes: vec![src
            .inputs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), i))
            .collect()],
        sites: Vec::new(),
        targets: Vec::new(),
        target_in_loop: Vec::new(),
        loop_depth: 0,
    };
    let body = lw.block(&src.body);
    let cfg = Cfg::build(&body, &lw.sites, lw.targets.len());
    Program {
        inputs: src.inputs.clone(),
        slot_count: lw.slot_count,
        body,
        sites: lw.sites,
        targets: lw.targets,
        target_in_loop: lw.target_in_loop,
        cfg,
    }
}

struct Lowerer<'a> {
    src: &'a SourceProgram,
    slot_count: usize,
    scopes: Vec<HashMap<String, usize>>,
    sites: Vec<BranchSite>,
    targets: Vec<String>,
    target_in_loop: Vec<bool>,
    loop_depth: usize,
}

impl Lowerer<'_> {
    fn fresh_slot(&mut self) -> usize {
        self.slot_count += 1;
        self.slot_count - 1
    }

    fn lookup(&self, name: &str) -> usize {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name).copied())
            .unwrap_or_else(|| panic!("unresolved variable `{name}` in validated program"))
    }

    fn bind(&mut self, name: &str) -> usize {
        let slot = self.fresh_slot();
        self.scopes
            .last_mut()
            .expect("scope stack")
            .insert(name.to_string(), slot);
        slot
    }

    fn block(&mut self, stmts: &[Stmt]) -> Vec<IrStmt> {
        self.scopes.push(HashMap::new());
        let mut out = Vec::new();
        for s in stmts {
            self.stmt(s, &mut out);
        }
        self.scopes.pop();
        out
    }

    fn stmt(&mut self, stmt: &Stmt, out: &mut Vec<IrStmt>) {
        match stmt {
            Stmt::Let(name, e) => {
                let v = self.expr(e, out);
                let slot = self.bind(name);
                out.push(IrStmt::Assign(slot, v));
            }
            Stmt::Assign(name, e) => {
                let v = self.expr(e, out);
                let slot = self.lookup(name);
                out.push(IrStmt::Assign(slot, v));
            }
            Stmt::If { cond, then, els } => {
                let cond = self.cond(cond, out);
                let then = self.block(then);
                let els = self.block(els);
                out.push(IrStmt::If { cond, then, els });
            }
            Stmt::While { cond, body } => {
                self.loop_depth += 1;
                let cond = self.cond(cond, out);
                let body = self.block(body);
                self.loop_depth -= 1;
                out.push(IrStmt::While { cond, body });
            }
            Stmt::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(HashMap::new());
                self.stmt(init, out);
                self.loop_depth += 1;
                let cond = self.cond(cond, out);
                let mut ir_body = self.block(body);
                self.stmt(step, &mut ir_body);
                self.loop_depth -= 1;
                self.scopes.pop();
                out.push(IrStmt::While {
                    cond,
                    body: ir_body,
                });
            }
            Stmt::Reach(label) => {
                self.targets.push(label.clone());
                self.target_in_loop.push(self.loop_depth > 0);
                out.push(IrStmt::Reach(self.targets.len() - 1));
            }
        }
    }

    /// Helper calls are hoisted into `pre`; the parser only admits them
    /// where running them before the enclosing statement is equivalent.
    fn cond(&mut self, cond: &Cond, pre: &mut Vec<IrStmt>) -> IrCond {
        match cond {
            Cond::Cmp(op, a, b) => {
                let lhs = self.expr(a, pre);
                let rhs = self.expr(b, pre);
                let label = self.sites.len();
                self.sites.push(BranchSite {
                    label,
                    op: *op,
                    lhs,
                    rhs,
                    in_loop: self.loop_depth > 0,
                });
                IrCond::Site(label)
            }
            Cond::Not(c) => IrCond::Not(Box::new(self.cond(c, pre))),
            Cond::And(a, b) => {
                let a = self.cond(a, pre);
                let b = self.cond(b, pre);
                IrCond::And(Box::new(a), Box::new(b))
            }
            Cond::Or(a, b) => {
                let a = self.cond(a, pre);
                let b = self.cond(b, pre);
                IrCond::Or(Box::new(a), Box::new(b))
            }
        }
    }

    fn expr(&mut self, e: &Expr, pre: &mut Vec<IrStmt>) -> IrExpr {
        match e {
            Expr::Num(v) => IrExpr::Const(*v),
            Expr::Var(name) => IrExpr::Slot(self.lookup(name)),
            Expr::Neg(a) => IrExpr::Neg(Box::new(self.expr(a, pre))),
            Expr::Bin(op, a, b) => {
                let a = self.expr(a, pre);
                let b = self.expr(b, pre);
                IrExpr::Bin(*op, Box::new(a), Box::new(b))
            }
            Expr::Call(name, args) => {
                let args: Vec<IrExpr> = args.iter().map(|a| self.expr(a, pre)).collect();
                if let Some(b) = Builtin::from_name(name) {
                    return IrExpr::Call(b, args);
                }
                self.inline(name, args, pre)
            }
        }
    }

    fn inline(&mut self, name: &str, args: Vec<IrExpr>, pre: &mut Vec<IrStmt>) -> IrExpr {
        let f = self
            .src
            .function(name)
            .unwrap_or_else(|| panic!("unknown helper `{name}` in validated program"));
        // The helper body sees only its own parameters.
        let saved = std::mem::replace(&mut self.scopes, vec![HashMap::new()]);
        for (param, arg) in f.params.iter().zip(args) {
            let slot = self.bind(param);
            pre.push(IrStmt::Assign(slot, arg));
        }
        for s in &f.body {
            self.stmt(s, pre);
        }
        let ret = self.expr(&f.ret, pre);
        let result = self.fresh_slot();
        pre.push(IrStmt::Assign(result, ret));
        self.scopes = saved;
        IrExpr::Slot(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn inlined_helper_sites_come_first() {
        let src = r#"
            input x: real in [-1, 1];
            fn safe_reciprocal(v) {
                let r = 0.0;
                if (v != 0.0) { r = 1.0 / v; }
                return r;
            }
            let y = safe_reciprocal(tan(x));
            if (y == 0) { reach("reach 0"); }
        "#;
        let p = lower(&parse(src).unwrap());
        assert_eq!(p.sites.len(), 2);
        assert_eq!(p.sites[0].op, CmpOp::Ne);
        assert_eq!(p.sites[1].op, CmpOp::Eq);
        assert!(p.sites.iter().all(|s| !s.in_loop));
    }

    #[test]
    fn helper_inlined_twice_gets_fresh_labels() {
        let src = r#"
            input x: real in [-1, 1];
            fn clip(v) { let r = v; if (v > 0.5) { r = 0.5; } return r; }
            let a = clip(x);
            let b = clip(x * 2);
            if (a + b > 0.9) { reach("t"); }
        "#;
        let p = lower(&parse(src).unwrap());
        let labels: Vec<usize> = p.sites.iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn loop_sites_are_marked() {
        let src = r#"
            input x: real in [0, 10];
            let s = 0;
            for (let i = 1; i <= floor(x); i = i + 1) {
                if (i > 3) { s = s + 1; }
            }
            if (s == 2) { reach("t"); }
        "#;
        let p = lower(&parse(src).unwrap());
        let in_loop: Vec<bool> = p.sites.iter().map(|s| s.in_loop).collect();
        assert_eq!(in_loop, vec![true, true, false]);
        assert_eq!(p.target_in_loop, vec![false]);
    }

    #[test]
    fn constants_are_harvested() {
        let src = "input x: real in [-5, 5]; if (x * 2.0 < -3.5) { reach(\"t\"); }";
        let p = lower(&parse(src).unwrap());
        let c = p.constants();
        assert!(c.contains(&2.0));
        assert!(c.contains(&3.5));
        assert!(c.contains(&-3.5));
    }
}
