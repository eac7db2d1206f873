//! Plain weak-distance objectives without the depth term, kept for
//! comparison against AWD. Both use the squared operand difference.

use crate::exec::{self, BranchObserver, EvalError, Flow};
use crate::lang::{BranchSite, CmpOp, Program};
use crate::paths::{BranchStep, PartialPath};

fn squared_gap(op: CmpOp, lhs: f64, rhs: f64) -> f64 {
    let d = match op {
        CmpOp::Ne => 1.0,
        _ => (lhs - rhs) * (lhs - rhs),
    };
    // a failed strict comparison between equal operands is still a miss
    if d.is_nan() {
        f64::MAX
    } else {
        d.max(f64::MIN_POSITIVE)
    }
}

fn required(site: &BranchSite, taken: bool) -> CmpOp {
    if taken {
        site.op
    } else {
        site.op.negate()
    }
}

struct NextUnmet<'a> {
    path: &'a [BranchStep],
    beats: usize,
    d: Option<f64>,
}

impl BranchObserver for NextUnmet<'_> {
    fn on_branch(&mut self, site: &BranchSite, lhs: f64, rhs: f64, taken: bool) -> Flow {
        if site.in_loop || self.d.is_some() {
            return Flow::Continue;
        }
        let expected = self.path[self.beats];
        self.beats += 1;
        if expected == BranchStep::new(site.label, taken) {
            if self.beats == self.path.len() {
                self.d = Some(0.0);
            }
            return Flow::Continue;
        }
        self.d = Some(if expected.label == site.label {
            squared_gap(required(site, expected.taken), lhs, rhs)
        } else {
            f64::MAX
        });
        Flow::Halt
    }
}

/// Squared operand gap of the next unmet branch of `path`; 0 once the whole
/// path is matched.
pub fn plain_wd(
    program: &Program,
    path: &PartialPath,
    x: &[f64],
    budget: u64,
) -> Result<f64, EvalError> {
    if path.is_empty() {
        return Ok(0.0);
    }
    let mut obs = NextUnmet {
        path: &path.steps,
        beats: 0,
        d: None,
    };
    exec::run(program, x, &mut obs, budget)?;
    Ok(obs.d.unwrap_or(f64::MAX))
}

struct Guard {
    step: BranchStep,
    d: Option<f64>,
}

impl BranchObserver for Guard {
    fn on_branch(&mut self, site: &BranchSite, lhs: f64, rhs: f64, taken: bool) -> Flow {
        if site.label != self.step.label {
            return Flow::Continue;
        }
        self.d = Some(if taken == self.step.taken {
            0.0
        } else {
            squared_gap(required(site, self.step.taken), lhs, rhs)
        });
        Flow::Halt
    }
}

/// Single objective over all paths: the squared gap at one guard branch,
/// wherever execution comes from. Large if the guard never executes.
pub fn guard_wd(
    program: &Program,
    guard: BranchStep,
    x: &[f64],
    budget: u64,
) -> Result<f64, EvalError> {
    let mut obs = Guard {
        step: guard,
        d: None,
    };
    exec::run(program, x, &mut obs, budget)?;
    Ok(obs.d.unwrap_or(f64::MAX))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::DEFAULT_STEP_BUDGET;
    use crate::lang::compile;
    use crate::samples;

    #[test]
    fn check_date_landscape_jumps() {
        let p = compile(samples::CHECK_DATE).unwrap();
        let pi = PartialPath {
            steps: vec![BranchStep::new(0, true), BranchStep::new(1, true)],
            target: "reached".into(),
        };
        let wd = |x: [f64; 2]| plain_wd(&p, &pi, &x, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(wd([19.0, 1.0]), 1.0);
        assert_eq!(wd([20.0, 1.0]), 81.0);
        assert_eq!(wd([20.0, 10.0]), 0.0);
        assert_eq!(wd([1.0, 1.0]), 361.0);
    }

    #[test]
    fn cot_guard_objective() {
        let p = compile(samples::COT).unwrap();
        let g = |x: f64| guard_wd(&p, BranchStep::new(1, true), &[x], DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(g(0.0), 0.0);
        assert!(g(1.5) < g(1.0));
        assert!(g(0.1) > g(1.0));
    }

    #[test]
    fn strict_miss_is_positive() {
        assert!(squared_gap(CmpOp::Lt, 1.0, 1.0) > 0.0);
        assert_eq!(squared_gap(CmpOp::Eq, f64::NAN, 1.0), f64::MAX);
    }
}
