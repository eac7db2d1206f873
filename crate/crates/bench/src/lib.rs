//! Benchmark fixtures shared by the criterion targets.

use std::path::{Path, PathBuf};

use awd_core::{compile, Program};

pub fn programs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/programs")
}

/// Compiles one of the bundled sample programs, e.g. `"check_sum.awd"`.
pub fn sample(name: &str) -> Program {
    let text = std::fs::read_to_string(programs_dir().join(name)).expect("sample program");
    compile(&text).expect("sample compiles")
}
