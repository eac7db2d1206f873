//! Benchmark manifests and the parallel suite runner.
//!
//! A manifest is JSON Lines, one entry per line:
//!
//! ```text
//! {"name": "check_date", "program": "check_date.awd", "target": "reached", "expected": "REA"}
//! {"program": "sine_2.awd", "target": "bound", "expected": "UNR", "box": {"x": [-1.0, 1.0]}}
//! ```
//!
//! Program paths are relative to the manifest's directory. `box` narrows
//! or replaces declared input ranges by name.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{lower, parse, Program};
use crate::optimize::derive_seed;
use crate::verify::{verify, Status, VerifyConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub program: PathBuf,
    pub target: String,
    pub expected: Status,
    #[serde(default, rename = "box")]
    pub bounds: BTreeMap<String, [f64; 2]>,
}

impl ManifestEntry {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.program
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory program paths are resolved against.
    pub base: PathBuf,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Line { line: usize, message: String },
}

impl Manifest {
    pub fn parse(text: &str, base: impl Into<PathBuf>) -> Result<Self, ManifestError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = serde_json::from_str(line).map_err(|e| ManifestError::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Self {
            entries,
            base: base.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }
}

/// Reads, parses and lowers an entry's program with its box overrides applied.
pub fn load_entry(entry: &ManifestEntry, base: &Path) -> Result<Program, String> {
    let path = base.join(&entry.program);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut src = parse(&text).map_err(|e| format!("{}:{e}", path.display()))?;
    for (name, &[lo, hi]) in &entry.bounds {
        let decl = src
            .inputs
            .iter_mut()
            .find(|d| &d.name == name)
            .ok_or_else(|| format!("box override for unknown input {name:?}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("invalid box override for {name:?}: [{lo}, {hi}]"));
        }
        decl.lo = lo;
        decl.hi = hi;
    }
    Ok(lower(&src))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub name: String,
    pub expected: Status,
    pub verdict: Option<Status>,
    pub min_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    pub paths_explored: usize,
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EntryReport {
    pub fn correct(&self) -> bool {
        self.verdict == Some(self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub correct: usize,
    /// `None` for an empty manifest.
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub entries: Vec<EntryReport>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub verify: VerifyConfig,
    pub jobs: usize,
    /// Include wall times in the report; off keeps reports byte-stable.
    pub timings: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            verify: VerifyConfig::default(),
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timings: false,
        }
    }
}

fn run_entry(
    entry: &ManifestEntry,
    base: &Path,
    index: usize,
    cfg: &SuiteConfig,
) -> (EntryReport, f64) {
    let started = Instant::now();
    let mut report = EntryReport {
        name: entry.display_name(),
        expected: entry.expected,
        verdict: None,
        min_value: None,
        witness: None,
        wall_time_s: None,
        paths_explored: 0,
        truncated: false,
        error: None,
    };
    let mut vcfg = cfg.verify;
    vcfg.optimizer.rng_seed = derive_seed(cfg.verify.optimizer.rng_seed, index as u64);
    match load_entry(entry, base)
        .and_then(|p| verify(&p, &entry.target, &vcfg).map_err(|e| e.to_string()))
    {
        Ok(v) => {
            report.verdict = Some(v.status);
            report.min_value = Some(v.min_value);
            report.witness = v.witness;
            report.paths_explored = v.paths_explored;
            report.truncated = v.truncated;
        }
        Err(e) => report.error = Some(e),
    }
    let secs = started.elapsed().as_secs_f64();
    if cfg.timings {
        report.wall_time_s = Some(secs);
    }
    (report, secs)
}

/// Runs every entry on a pool of `cfg.jobs` threads. Entry `i` uses seed
/// `derive_seed(seed, i)`, so the report does not depend on scheduling.
pub fn run_suite(manifest: &Manifest, cfg: &SuiteConfig) -> SuiteReport {
    let n = manifest.entries.len();
    let slots: Mutex<Vec<Option<(EntryReport, f64)>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    let workers = cfg.jobs.clamp(1, n.max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = run_entry(&manifest.entries[i], &manifest.base, i, cfg);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    let done: Vec<(EntryReport, f64)> = slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every entry ran"))
        .collect();
    let correct = done.iter().filter(|(r, _)| r.correct()).count();
    let mean = (n > 0).then(|| done.iter().map(|(_, t)| t).sum::<f64>() / n as f64);
    SuiteReport {
        summary: Summary {
            total: n,
            correct,
            accuracy: (n > 0).then(|| correct as f64 / n as f64),
            mean_wall_time_s: if cfg.timings { mean } else { None },
        },
        entries: done.into_iter().map(|(r, _)| r).collect(),
    }
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Plain-text table, one row per entry plus a summary line.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>4} {:>4} {:>12} {:>6}  note",
            "name", "G.T.", "got", "minimum", "paths"
        );
        for e in &self.entries {
            let got = e.verdict.map_or("ERR".to_string(), |v| v.to_string());
            let min = e.min_value.map_or("-".to_string(), |m| format!("{m:.3e}"));
            let note = match (&e.error, e.correct()) {
                (Some(err), _) => err.clone(),
                (None, true) => String::new(),
                (None, false) => "MISMATCH".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<24} {:>4} {:>4} {:>12} {:>6}  {}",
                e.name, e.expected, got, min, e.paths_explored, note
            );
        }
        let acc = self
            .summary
            .accuracy
            .map_or("n/a".to_string(), |a| format!("{:.1}%", a * 100.0));
        let _ = write!(
            out,
            "accuracy {acc} ({}/{})",
            self.summary.correct, self.summary.total
        );
        if let Some(t) = self.summary.mean_wall_time_s {
            let _ = write!(out, ", mean time {t:.3}s");
        }
        out.push('\n');
        out
    }
}
