//! End-to-end verification: synthesize partial paths, minimize each path's
//! AWD, and confirm any zero by replay. Also a brute-force grid oracle.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::M;
use crate::exec::{clamp_total, DEFAULT_STEP_BUDGET};
use crate::lang::Program;
use crate::optimize::{
    basinhopping, derive_seed, MinimizationResult, OptimizerConfig, OptimizerError, SearchBox,
};
use crate::paths::{synthesize_paths, PartialPath, SynthesisConfig, SynthesisError};
use crate::sentinel::{awd_evaluate, replay};

/// Largest grid the oracle will enumerate.
pub const ORACLE_MAX_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "REA")]
    Rea,
    #[serde(rename = "UNR")]
    Unr,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Rea => "REA",
            Status::Unr => "UNR",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "REA" => Ok(Status::Rea),
            "UNR" => Ok(Status::Unr),
            other => Err(format!("expected REA or UNR, found {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub path: PartialPath,
    pub result: MinimizationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<Vec<f64>>,
    /// Smallest objective value attained across all explored paths.
    pub min_value: f64,
    pub per_path: Vec<PathResult>,
    pub wall_time: f64,
    /// Set on UNR: no zero was found, which is not a proof of unreachability.
    pub caveat: bool,
    pub paths_explored: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyConfig {
    pub synthesis: SynthesisConfig,
    pub optimizer: OptimizerConfig,
    pub step_budget: Option<u64>,
}

impl VerifyConfig {
    fn budget(&self) -> u64 {
        self.step_budget.unwrap_or(DEFAULT_STEP_BUDGET)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("no partial path to {0:?} within the depth and count limits")]
    NoPathsWithinLimits(String),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(
        "soundness violation: path {path} has AWD 0 at {witness:?} but replay misses the target"
    )]
    Soundness { path: String, witness: Vec<f64> },
    #[error("oracle limits exceeded: {0}")]
    OracleLimits(String),
}

/// The declared input box of `program`.
pub fn input_box(program: &Program) -> SearchBox {
    let bounds: Vec<(f64, f64)> = program.inputs.iter().map(|d| (d.lo, d.hi)).collect();
    SearchBox::new(&bounds).expect("parser guarantees finite ordered bounds")
}

fn penalty(path: &PartialPath) -> f64 {
    (path.len() as f64 + 1.0) * M
}

/// Searches for an input reaching `target`, one partial path at a time.
///
/// Paths are tried in synthesis order with seed `derive_seed(seed, index)`;
/// the first exact zero is replayed and, if confirmed, returned as REA.
pub fn verify(program: &Program, target: &str, cfg: &VerifyConfig) -> Result<Verdict, VerifyError> {
    let started = Instant::now();
    cfg.optimizer.validate()?;
    let synthesis = synthesize_paths(program, target, &cfg.synthesis)?;
    if synthesis.paths.is_empty() {
        return Err(VerifyError::NoPathsWithinLimits(target.to_string()));
    }
    let bx = input_box(program);
    let budget = cfg.budget();

    let mut per_path = Vec::new();
    let mut witness = None;
    for (i, path) in synthesis.paths.iter().enumerate() {
        let fallback = penalty(path);
        let objective = |x: &[f64]| {
            awd_evaluate(program, path, x, budget)
                .map(|o| o.d)
                .unwrap_or(fallback)
        };
        let opt = OptimizerConfig {
            rng_seed: derive_seed(cfg.optimizer.rng_seed, i as u64),
            ..cfg.optimizer
        };
        let result = basinhopping(objective, &bx, &opt)?;
        let zero = result.best_value == 0.0;
        if zero {
            let x = result.best_x.clone();
            if !replay(program, &x, target, budget).unwrap_or(false) {
                return Err(VerifyError::Soundness {
                    path: path.to_string(),
                    witness: x,
                });
            }
            witness = Some(x);
        }
        per_path.push(PathResult {
            path: path.clone(),
            result,
        });
        if zero {
            break;
        }
    }

    let min_value = per_path
        .iter()
        .map(|p| p.result.best_value)
        .fold(f64::INFINITY, f64::min);
    let status = if witness.is_some() {
        Status::Rea
    } else {
        Status::Unr
    };
    Ok(Verdict {
        status,
        witness,
        min_value,
        paths_explored: per_path.len(),
        per_path,
        wall_time: started.elapsed().as_secs_f64(),
        caveat: status == Status::Unr,
        truncated: synthesis.truncated,
    })
}

/// Grid coordinates for one input: `n` evenly spaced points, the bounds,
/// and every program constant (both signs) with its neighbouring doubles.
fn grid_axis(lo: f64, hi: f64, n: usize, constants: &[f64]) -> Vec<f64> {
    let mut axis = vec![lo, hi];
    if n == 1 {
        axis.push(lo);
    } else {
        let step = (hi - lo) / (n - 1) as f64;
        axis.extend((0..n).map(|k| (lo + step * k as f64).min(hi)));
    }
    for &c in constants {
        for v in [c, -c] {
            axis.extend([v, v.next_up(), v.next_down()]);
        }
    }
    // total order, so a bound of 0.0 keeps -0.0 out
    axis.retain(|w| clamp_total(*w, lo, hi).to_bits() == w.to_bits());
    axis.sort_by(f64::total_cmp);
    axis.dedup_by(|a, b| a.to_bits() == b.to_bits());
    axis
}

/// Brute-force reference verdict by replay on a grid.
///
/// Supports at most two inputs and [`ORACLE_MAX_POINTS`] grid points. UNR
/// only means no grid point reaches the target; its `min_value` is the
/// smallest AWD over grid points and paths.
pub fn oracle_verify(
    program: &Program,
    target: &str,
    grid: usize,
    budget: u64,
) -> Result<Verdict, VerifyError> {
    let started = Instant::now();
    let dim = program.dimension();
    if dim > 2 {
        return Err(VerifyError::OracleLimits(format!(
            "{dim} inputs, at most 2 supported"
        )));
    }
    if grid == 0 {
        return Err(VerifyError::OracleLimits(
            "grid density must be positive".into(),
        ));
    }
    let constants = program.constants();
    let axes: Vec<Vec<f64>> = program
        .inputs
        .iter()
        .map(|d| grid_axis(d.lo, d.hi, grid, &constants))
        .collect();
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .filter(|&t| t <= ORACLE_MAX_POINTS)
        .ok_or_else(|| {
            VerifyError::OracleLimits(format!(
                "grid of density {grid} exceeds {ORACLE_MAX_POINTS} points"
            ))
        })?;
    let synthesis = synthesize_paths(program, target, &SynthesisConfig::default())?;

    let point = |k: usize| -> Vec<f64> {
        let mut rest = k;
        let mut x = Vec::with_capacity(dim);
        for axis in axes.iter().rev() {
            x.push(axis[rest % axis.len()]);
            rest /= axis.len();
        }
        x.reverse();
        x
    };

    for k in 0..total {
        let x = point(k);
        if replay(program, &x, target, budget).unwrap_or(false) {
            return Ok(Verdict {
                status: Status::Rea,
                witness: Some(x),
                min_value: 0.0,
                per_path: Vec::new(),
                wall_time: started.elapsed().as_secs_f64(),
                caveat: false,
                paths_explored: synthesis.paths.len(),
                truncated: synthesis.truncated,
            });
        }
    }

    let mut min_value = f64::INFINITY;
    for path in &synthesis.paths {
        for k in 0..total {
            let d = awd_evaluate(program, path, &point(k), budget)
                .map(|o| o.d)
                .unwrap_or_else(|_| penalty(path));
            min_value = min_value.min(d);
        }
    }
    Ok(Verdict {
        status: Status::Unr,
        witness: None,
        min_value,
        per_path: Vec::new(),
        wall_time: started.elapsed().as_secs_f64(),
        caveat: true,
        paths_explored: synthesis.paths.len(),
        truncated: synthesis.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::prepare_inputs;
    use crate::lang::compile;
    use crate::samples;

    fn run(src: &str, target: &str) -> Verdict {
        let p = compile(src).unwrap();
        let cfg = VerifyConfig {
            optimizer: OptimizerConfig {
                rng_seed: 42,
                ..OptimizerConfig::default()
            },
            ..VerifyConfig::default()
        };
        verify(&p, target, &cfg).unwrap()
    }

    #[test]
    fn check_sum_is_reachable() {
        let v = run(samples::CHECK_SUM, "Unexpected");
        assert_eq!(v.status, Status::Rea);
        assert_eq!(v.min_value, 0.0);
        let w = v.witness.unwrap();
        assert!(4.0 < w[0] && w[0] < 5.0);
        assert!(!v.caveat);
    }

    #[test]
    fn check_date_is_reachable() {
        let p = compile(samples::CHECK_DATE).unwrap();
        let v = verify(&p, "reached", &VerifyConfig::default()).unwrap();
        assert_eq!(v.status, Status::Rea);
        assert_eq!(prepare_inputs(&p, &v.witness.unwrap()), vec![20.0, 10.0]);
    }

    #[test]
    fn cot_zero_on_the_tangent_path() {
        let v = run(samples::COT, "reach 0");
        assert_eq!(v.status, Status::Rea);
        assert_eq!(v.witness.unwrap()[0], 0.0);
        assert_eq!(v.paths_explored, 1);
    }

    #[test]
    fn square_negative_is_unreachable() {
        let v = run(samples::SQUARE_NEGATIVE, "t");
        assert_eq!(v.status, Status::Unr);
        assert!(v.min_value > 0.0);
        assert!(v.caveat);
        assert!(v.witness.is_none());
    }

    #[test]
    fn verify_errors() {
        let p =
            compile("input x: real in [0, 1]; while (x < 1) { x = x + 1; reach(\"l\"); }").unwrap();
        assert!(matches!(
            verify(&p, "l", &VerifyConfig::default()),
            Err(VerifyError::Synthesis(SynthesisError::TargetInLoop(_)))
        ));
        let p = compile(samples::FOO).unwrap();
        assert!(matches!(
            verify(&p, "nope", &VerifyConfig::default()),
            Err(VerifyError::Synthesis(SynthesisError::UnknownTarget(_)))
        ));
    }

    #[test]
    fn oracle_examples() {
        let p = compile(samples::FOO).unwrap();
        let v = oracle_verify(&p, "error", 10_000, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(v.status, Status::Rea);

        let p = compile(samples::SQUARE_NEGATIVE).unwrap();
        let v = oracle_verify(&p, "t", 1000, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(v.status, Status::Unr);
        assert!(v.min_value > 0.0);

        let p = compile(samples::CHECK_DATE).unwrap();
        let v = oracle_verify(&p, "reached", 31, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(v.status, Status::Rea);
        assert_eq!(v.witness.unwrap(), vec![20.0, 10.0]);
    }

    #[test]
    fn oracle_limits() {
        let p = compile(
            "input a: real in [0, 1]; input b: real in [0, 1]; input c: real in [0, 1]; reach(\"t\");",
        )
        .unwrap();
        assert!(matches!(
            oracle_verify(&p, "t", 10, DEFAULT_STEP_BUDGET),
            Err(VerifyError::OracleLimits(_))
        ));
        let p = compile(samples::CHECK_DATE).unwrap();
        assert!(matches!(
            oracle_verify(&p, "reached", 10_000, DEFAULT_STEP_BUDGET),
            Err(VerifyError::OracleLimits(_))
        ));
    }

    #[test]
    fn grid_axis_includes_boundary_neighbours() {
        let axis = grid_axis(0.0, 10.0, 3, &[3.0]);
        assert!(axis.contains(&3.0));
        assert!(axis.contains(&3.0f64.next_up()));
        assert!(axis.contains(&3.0f64.next_down()));
        assert!(axis.contains(&5.0));
        assert!(axis.windows(2).all(|w| w[0] < w[1]));
        assert!(grid_axis(0.0, 1.0, 2, &[0.0])
            .iter()
            .all(|w| w.is_sign_positive()));
        assert!(grid_axis(-1.0, 1.0, 2, &[0.0])
            .iter()
            .any(|w| w.is_sign_negative() && *w == 0.0));
    }
}
