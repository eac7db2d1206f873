//! Tree-walking interpreter over the lowered program with strict IEEE-754
//! double semantics. Instrumentation hooks in through [`BranchObserver`].

use thiserror::Error;

use crate::lang::{BranchSite, IrCond, IrExpr, IrStmt, Program, ScalarKind};
use crate::paths::BranchStep;

/// Default interpreter step budget per evaluation.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Halt,
}

/// Callback fired at every comparison and every reach marker.
pub trait BranchObserver {
    /// Called after both operands are evaluated and before control moves.
    fn on_branch(&mut self, site: &BranchSite, lhs: f64, rhs: f64, taken: bool) -> Flow;

    fn on_reach(&mut self, _target: usize) -> Flow {
        Flow::Continue
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("step budget of {budget} exhausted")]
    StepBudget {
        budget: u64,
        /// Non-loop branch steps taken before the budget ran out.
        realized: Vec<BranchStep>,
    },
    #[error("expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunEnd {
    Completed,
    Halted,
}

/// Clamps `v` into `[lo, hi]` under IEEE total order, so a bound of `0.0`
/// excludes `-0.0`. NaN maps to `lo`.
pub fn clamp_total(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() || v.total_cmp(&lo).is_lt() {
        lo
    } else if v.total_cmp(&hi).is_gt() {
        hi
    } else {
        v
    }
}

/// Maps a search-space point to program inputs: clamp into the declared
/// box, then floor integer inputs.
pub fn prepare_inputs(program: &Program, x: &[f64]) -> Vec<f64> {
    program
        .inputs
        .iter()
        .zip(x)
        .map(|(decl, &v)| {
            let v = clamp_total(v, decl.lo, decl.hi);
            match decl.kind {
                ScalarKind::Real => v,
                ScalarKind::Int => v.floor(),
            }
        })
        .collect()
}

struct Machine<'p, O> {
    program: &'p Program,
    slots: Vec<f64>,
    observer: &'p mut O,
    steps: u64,
    budget: u64,
    realized: Vec<BranchStep>,
}

enum Stop {
    Halt,
    Budget,
}

impl<O: BranchObserver> Machine<'_, O> {
    fn tick(&mut self) -> Result<(), Stop> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(Stop::Budget)
        } else {
            Ok(())
        }
    }

    fn expr(&self, e: &IrExpr) -> f64 {
        match e {
            IrExpr::Const(v) => *v,
            IrExpr::Slot(s) => self.slots[*s],
            IrExpr::Neg(a) => -self.expr(a),
            IrExpr::Bin(op, a, b) => op.apply(self.expr(a), self.expr(b)),
            IrExpr::Call(b, args) => match args.as_slice() {
                [a] => b.apply(&[self.expr(a)]),
                [a, c] => b.apply(&[self.expr(a), self.expr(c)]),
                _ => unreachable!("builtin arity checked at parse time"),
            },
        }
    }

    fn cond(&mut self, c: &IrCond) -> Result<bool, Stop> {
        match c {
            IrCond::Site(label) => {
                self.tick()?;
                let site = &self.program.sites[*label];
                let lhs = self.expr(&site.lhs);
                let rhs = self.expr(&site.rhs);
                let taken = site.op.eval(lhs, rhs);
                if !site.in_loop {
                    self.realized.push(BranchStep::new(*label, taken));
                }
                match self.observer.on_branch(site, lhs, rhs, taken) {
                    Flow::Continue => Ok(taken),
                    Flow::Halt => Err(Stop::Halt),
                }
            }
            IrCond::Not(a) => Ok(!self.cond(a)?),
            IrCond::And(a, b) => Ok(self.cond(a)? && self.cond(b)?),
            IrCond::Or(a, b) => Ok(self.cond(a)? || self.cond(b)?),
        }
    }

    fn block(&mut self, stmts: &[IrStmt]) -> Result<(), Stop> {
        for s in stmts {
            self.tick()?;
            match s {
                IrStmt::Assign(slot, e) => self.slots[*slot] = self.expr(e),
                IrStmt::If { cond, then, els } => {
                    if self.cond(cond)? {
                        self.block(then)?
                    } else {
                        self.block(els)?
                    }
                }
                IrStmt::While { cond, body } => {
                    while self.cond(cond)? {
                        self.block(body)?;
                    }
                }
                IrStmt::Reach(t) => {
                    if self.observer.on_reach(*t) == Flow::Halt {
                        return Err(Stop::Halt);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs `program` on the search-space point `x` (clamped and floored via
/// [`prepare_inputs`]) and returns the non-loop branch steps realized.
pub fn run<O: BranchObserver>(
    program: &Program,
    x: &[f64],
    observer: &mut O,
    budget: u64,
) -> Result<(RunEnd, Vec<BranchStep>), EvalError> {
    if x.len() != program.inputs.len() {
        return Err(EvalError::Arity {
            expected: program.inputs.len(),
            got: x.len(),
        });
    }
    let mut slots = vec![0.0; program.slot_count];
    slots[..x.len()].copy_from_slice(&prepare_inputs(program, x));
    let mut m = Machine {
        program,
        slots,
        observer,
        steps: 0,
        budget,
        realized: Vec::new(),
    };
    match m.block(&program.body) {
        Ok(()) => Ok((RunEnd::Completed, m.realized)),
        Err(Stop::Halt) => Ok((RunEnd::Halted, m.realized)),
        Err(Stop::Budget) => Err(EvalError::StepBudget {
            budget,
            realized: m.realized,
        }),
    }
}

/// One non-loop comparison as it executed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub step: BranchStep,
    pub op: crate::lang::CmpOp,
    pub lhs: f64,
    pub rhs: f64,
}

/// Records every non-loop comparison and every reach marker, never halting.
#[derive(Debug, Default, Clone)]
pub struct Tracer {
    pub entries: Vec<TraceEntry>,
    pub reached: Vec<usize>,
}

impl BranchObserver for Tracer {
    fn on_branch(&mut self, site: &BranchSite, lhs: f64, rhs: f64, taken: bool) -> Flow {
        if !site.in_loop {
            self.entries.push(TraceEntry {
                step: BranchStep::new(site.label, taken),
                op: site.op,
                lhs,
                rhs,
            });
        }
        Flow::Continue
    }

    fn on_reach(&mut self, target: usize) -> Flow {
        self.reached.push(target);
        Flow::Continue
    }
}

/// Full uninstrumented execution trace of `program` on `x`.
pub fn trace(program: &Program, x: &[f64], budget: u64) -> Result<Tracer, EvalError> {
    let mut t = Tracer::default();
    run(program, x, &mut t, budget)?;
    Ok(t)
}
