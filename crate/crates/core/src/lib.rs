//! Floating-point bounds-checking verification by minimizing an augmented
//! weak distance over synthesized partial paths.

pub mod ablation;
pub mod affinity;
pub mod corpus;
pub mod exec;
pub mod lang;
pub mod optimize;
pub mod paths;
pub mod samples;
pub mod sentinel;
pub mod suite;
pub mod verify;

pub use affinity::{kappa, operand_distance, scale_v, Affinity, M};
pub use exec::{EvalError, DEFAULT_STEP_BUDGET};
pub use lang::{compile, parse, CmpOp, ParseError, Program, SourceProgram};
pub use optimize::{
    basinhopping, basinhopping_from, derive_seed, powell_minimize, MinimizationResult,
    OptimizerConfig, SearchBox, StopReason,
};
pub use paths::{synthesize_paths, BranchStep, PartialPath, Synthesis, SynthesisConfig};
pub use sentinel::{awd_evaluate, replay, AwdOutcome, Fork};
pub use suite::{run_suite, Manifest, ManifestEntry, SuiteConfig, SuiteReport};
pub use verify::{oracle_verify, verify, PathResult, Status, Verdict, VerifyConfig, VerifyError};
