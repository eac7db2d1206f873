//! The embedded branch sentinel: evaluates the augmented weak distance of an
//! input with respect to a partial path.
//!
//! Before every non-loop comparison the sentinel checks the next expected
//! step of the path against the realized outcome. A full match latches
//! `d = 0`; the first divergence (the fork) latches `d = u·M + ln(1 + v)`
//! where `u` counts the path steps from the fork on and `v` is the operand
//! distance to making the expected outcome hold.

use serde::{Deserialize, Serialize};

use crate::affinity::{self, Affinity, MAX_OPERAND_DISTANCE};
use crate::exec::{self, BranchObserver, EvalError, Flow, RunEnd};
use crate::lang::{BranchSite, CmpOp, Program};
use crate::paths::{BranchStep, PartialPath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fork {
    pub label: usize,
    /// Comparator whose truth would have followed the path.
    pub op: CmpOp,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AwdOutcome {
    pub d: f64,
    pub fully_matched: bool,
    pub affinity: Affinity,
    pub fork: Option<Fork>,
    pub realized_path: Vec<BranchStep>,
}

/// Per-evaluation sentinel state.
#[derive(Debug)]
pub struct ExecState<'a> {
    path: &'a [BranchStep],
    target: usize,
    pub beats: usize,
    pub d: f64,
    pub sentinel_enabled: bool,
    pub affinity: Affinity,
    pub fork: Option<Fork>,
    matched: bool,
}

impl<'a> ExecState<'a> {
    fn new(path: &'a [BranchStep], target: usize) -> Self {
        let matched = path.is_empty();
        Self {
            path,
            target,
            beats: 0,
            d: if matched { 0.0 } else { f64::NAN },
            sentinel_enabled: !matched,
            affinity: Affinity::ZERO,
            fork: None,
            matched,
        }
    }

    fn latch_fork(&mut self, site: &BranchSite, expected: BranchStep, lhs: f64, rhs: f64) {
        // u counts the fork step itself; beats has already moved past it
        let u = (self.path.len() - self.beats + 1) as u64;
        let (op, v_original) = if expected.label == site.label {
            let op = if expected.taken {
                site.op
            } else {
                site.op.negate()
            };
            (op, affinity::operand_distance(op, lhs, rhs))
        } else {
            (site.op, MAX_OPERAND_DISTANCE)
        };
        self.affinity = Affinity {
            u,
            v: affinity::scale_v(v_original),
        };
        self.d = self.affinity.encode().expect("scaled distance is below M");
        self.fork = Some(Fork {
            label: site.label,
            op,
            lhs,
            rhs,
        });
        self.sentinel_enabled = false;
    }
}

impl BranchObserver for ExecState<'_> {
    fn on_branch(&mut self, site: &BranchSite, lhs: f64, rhs: f64, taken: bool) -> Flow {
        if site.in_loop || !self.sentinel_enabled {
            return Flow::Continue;
        }
        let expected = self.path[self.beats];
        self.beats += 1;
        let realized = BranchStep::new(site.label, taken);
        if expected == realized && self.beats == self.path.len() {
            self.d = 0.0;
            self.matched = true;
            self.sentinel_enabled = false;
            Flow::Continue
        } else if expected == realized {
            Flow::Continue
        } else {
            self.latch_fork(site, expected, lhs, rhs);
            Flow::Halt
        }
    }

    fn on_reach(&mut self, target: usize) -> Flow {
        if self.matched && target == self.target {
            Flow::Halt
        } else {
            Flow::Continue
        }
    }
}

/// Evaluates `AWD(path, x)`.
///
/// `x` is clamped into the input box (integer inputs floored). If the
/// program ends after matching only part of the path, the next step is
/// treated as a fork with maximal operand distance.
pub fn awd_evaluate(
    program: &Program,
    path: &PartialPath,
    x: &[f64],
    budget: u64,
) -> Result<AwdOutcome, EvalError> {
    let target = program.target_index(&path.target).unwrap_or(usize::MAX);
    let mut state = ExecState::new(&path.steps, target);
    let (end, realized) = exec::run(program, x, &mut state, budget)?;
    if end == RunEnd::Completed && !state.matched && state.fork.is_none() {
        state.affinity = Affinity {
            u: (path.len() - state.beats) as u64,
            v: affinity::scale_v(MAX_OPERAND_DISTANCE),
        };
        state.d = state.affinity.encode().expect("scaled distance is below M");
    }
    Ok(AwdOutcome {
        d: state.d,
        fully_matched: state.matched,
        affinity: state.affinity,
        fork: state.fork,
        realized_path: realized,
    })
}

struct Replay {
    target: usize,
    hit: bool,
}

impl BranchObserver for Replay {
    fn on_branch(&mut self, _: &BranchSite, _: f64, _: f64, _: bool) -> Flow {
        Flow::Continue
    }

    fn on_reach(&mut self, target: usize) -> Flow {
        if target == self.target {
            self.hit = true;
            Flow::Halt
        } else {
            Flow::Continue
        }
    }
}

/// Runs the program uninstrumented; true iff the target's reach marker executes.
pub fn replay(program: &Program, x: &[f64], target: &str, budget: u64) -> Result<bool, EvalError> {
    let Some(t) = program.target_index(target) else {
        return Ok(false);
    };
    let mut r = Replay {
        target: t,
        hit: false,
    };
    exec::run(program, x, &mut r, budget)?;
    Ok(r.hit)
}
