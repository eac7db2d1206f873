//! Partial-path synthesis: breadth-first enumeration of the branch
//! decisions leading from the entry to a target reach marker.
//!
//! Loop headers and branches inside loop bodies are walked over in both
//! directions without being recorded, so a path may pass a loop (which then
//! runs concretely at evaluation time) but never conditions on it.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Cfg, NodeId, Op, Program, Terminator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchStep {
    pub label: usize,
    pub taken: bool,
}

impl BranchStep {
    pub fn new(label: usize, taken: bool) -> Self {
        Self { label, taken }
    }
}

impl fmt::Display for BranchStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, if self.taken { 'T' } else { 'F' })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialPath {
    pub steps: Vec<BranchStep>,
    pub target: String,
}

impl PartialPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// True when `realized` starts with every step of this path.
    pub fn is_prefix_of(&self, realized: &[BranchStep]) -> bool {
        realized.len() >= self.steps.len() && realized[..self.steps.len()] == self.steps[..]
    }
}

impl fmt::Display for PartialPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "] -> {:?}", self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthesisConfig {
    pub max_depth: usize,
    pub max_paths: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            max_depth: 64,
            max_paths: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("unknown target {0:?}")]
    UnknownTarget(String),
    #[error("target {0:?} is inside a loop; loop-internal branches are not instrumented")]
    TargetInLoop(String),
    #[error("max_depth and max_paths must both be at least 1")]
    InvalidConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synthesis {
    pub paths: Vec<PartialPath>,
    /// Set when a depth or count limit cut enumeration short.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Target,
    Site(usize),
}

/// Everything reachable from `start` before the next non-loop branch site.
fn advance(cfg: &Cfg, start: NodeId, target: usize) -> BTreeSet<Event> {
    let mut events = BTreeSet::new();
    let mut seen = vec![false; cfg.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(n) = stack.pop() {
        let block = &cfg.nodes[n];
        if block.ops.contains(&Op::Reach(target)) {
            events.insert(Event::Target);
            continue;
        }
        let next = match block.term {
            Terminator::Exit => continue,
            Terminator::Goto(s) => [Some(s), None],
            Terminator::Branch {
                label,
                on_true,
                on_false,
            } => {
                if !cfg.site_in_loop(label) {
                    events.insert(Event::Site(label));
                    continue;
                }
                [Some(on_true), Some(on_false)]
            }
        };
        for s in next.into_iter().flatten() {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    events
}

/// Enumerates the partial paths of `program` that end at `target`.
///
/// Paths are ordered by length, then lexicographically by label with the
/// false direction first.
pub fn synthesize_paths(
    program: &Program,
    target: &str,
    config: &SynthesisConfig,
) -> Result<Synthesis, SynthesisError> {
    if config.max_depth == 0 || config.max_paths == 0 {
        return Err(SynthesisError::InvalidConfig);
    }
    let t = program
        .target_index(target)
        .ok_or_else(|| SynthesisError::UnknownTarget(target.to_string()))?;
    if program.target_in_loop[t] {
        return Err(SynthesisError::TargetInLoop(target.to_string()));
    }
    let cfg = &program.cfg;

    let mut paths: Vec<Vec<BranchStep>> = Vec::new();
    let mut truncated = false;
    let mut queue: VecDeque<(Vec<BranchStep>, NodeId)> = VecDeque::new();
    queue.push_back((Vec::new(), cfg.entry));

    'bfs: while let Some((steps, node)) = queue.pop_front() {
        for event in advance(cfg, node, t) {
            match event {
                Event::Target => {
                    if paths.len() == config.max_paths {
                        truncated = true;
                        break 'bfs;
                    }
                    paths.push(steps.clone());
                }
                Event::Site(label) => {
                    if steps.len() == config.max_depth {
                        truncated = true;
                        continue;
                    }
                    let Terminator::Branch {
                        on_true, on_false, ..
                    } = cfg.nodes[cfg.site_nodes[label]].term
                    else {
                        unreachable!("site node without a branch terminator")
                    };
                    for (taken, succ) in [(false, on_false), (true, on_true)] {
                        let mut next = steps.clone();
                        next.push(BranchStep::new(label, taken));
                        queue.push_back((next, succ));
                    }
                }
            }
        }
    }

    paths.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    paths.dedup();
    Ok(Synthesis {
        paths: paths
            .into_iter()
            .map(|steps| PartialPath {
                steps,
                target: target.to_string(),
            })
            .collect(),
        truncated,
    })
}
