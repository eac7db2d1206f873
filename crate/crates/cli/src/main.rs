use std::path::{Path, PathBuf};
use std::process::ExitCode;

use awd_core::exec::DEFAULT_STEP_BUDGET;
use awd_core::verify::{oracle_verify, Verdict};
use awd_core::{
    compile, run_suite, verify, Manifest, OptimizerConfig, Program, Status, SuiteConfig,
    SynthesisConfig, VerifyConfig, VerifyError,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "awd",
    version,
    about = "Floating-point bounds checking by augmented weak distance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for an input that reaches a target label.
    Verify {
        file: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
        #[arg(long, default_value_t = 4096)]
        max_paths: usize,
        #[command(flatten)]
        opt: OptArgs,
        /// Also write the verdict as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run every entry of a JSON Lines benchmark manifest.
    Bench {
        manifest: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        opt: OptArgs,
        /// Record wall times in the report (makes it run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Brute-force grid replay for programs with at most two inputs.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        target: String,
        /// Points per input dimension.
        #[arg(long)]
        grid: usize,
    },
}

#[derive(Args)]
struct OptArgs {
    #[arg(long, default_value_t = 200)]
    hops: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    step_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
}

impl OptArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            hops: self.hops,
            restarts: self.restarts,
            rng_seed: self.seed,
            step_scale: self.step_scale,
            temperature: self.temperature,
            ..OptimizerConfig::default()
        }
    }
}

enum Failure {
    Usage(String),
    Soundness(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    compile(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
}

fn classify(e: VerifyError) -> Failure {
    match e {
        VerifyError::Soundness { .. } => Failure::Soundness(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

fn verdict_json(target: &str, v: &Verdict) -> serde_json::Value {
    let per_path: Vec<_> = v
        .per_path
        .iter()
        .map(|p| {
            json!({
                "path": p.path.steps.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "best_value": p.result.best_value,
                "best_x": p.result.best_x,
                "evaluations": p.result.evaluations,
                "reason": p.result.reason,
            })
        })
        .collect();
    json!({
        "target": target,
        "verdict": v.status,
        "min_value": v.min_value,
        "witness": v.witness,
        "caveat": v.caveat,
        "paths_explored": v.paths_explored,
        "truncated": v.truncated,
        "wall_time_s": v.wall_time,
        "per_path": per_path,
    })
}

fn print_verdict(target: &str, v: &Verdict) {
    match v.status {
        Status::Rea => println!("{target:?}: REA"),
        Status::Unr => println!("{target:?}: UNR (no zero found; not a proof)"),
    }
    if let Some(w) = &v.witness {
        println!("witness: {w:?}");
    }
    println!("minimum: {:e}", v.min_value);
    println!(
        "paths explored: {}{}",
        v.paths_explored,
        if v.truncated {
            " (enumeration truncated)"
        } else {
            ""
        }
    );
    println!("time: {:.3}s", v.wall_time);
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Verify {
            file,
            target,
            max_depth,
            max_paths,
            opt,
            json,
        } => {
            let program = load_program(&file)?;
            let cfg = VerifyConfig {
                synthesis: SynthesisConfig {
                    max_depth,
                    max_paths,
                },
                optimizer: opt.config(),
                step_budget: None,
            };
            let v = verify(&program, &target, &cfg).map_err(classify)?;
            print_verdict(&target, &v);
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&verdict_json(&target, &v))
                    .expect("verdict serializes");
                std::fs::write(path, text + "\n")?;
            }
        }
        Command::Bench {
            manifest,
            jobs,
            json,
            opt,
            timings,
        } => {
            let m = Manifest::load(&manifest).map_err(|e| Failure::Usage(e.to_string()))?;
            let defaults = SuiteConfig::default();
            let cfg = SuiteConfig {
                verify: VerifyConfig {
                    optimizer: opt.config(),
                    ..VerifyConfig::default()
                },
                jobs: jobs.unwrap_or(defaults.jobs),
                timings,
            };
            cfg.verify
                .optimizer
                .validate()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let report = run_suite(&m, &cfg);
            print!("{}", report.table());
            if let Some(path) = json {
                std::fs::write(path, report.to_json())?;
            }
            if let Some(e) = report
                .entries
                .iter()
                .filter_map(|e| e.error.as_deref())
                .find(|e| e.starts_with("soundness"))
            {
                return Err(Failure::Soundness(e.to_string()));
            }
        }
        Command::Oracle { file, target, grid } => {
            let program = load_program(&file)?;
            let v =
                oracle_verify(&program, &target, grid, DEFAULT_STEP_BUDGET).map_err(classify)?;
            match v.status {
                Status::Rea => println!("{target:?}: REA"),
                Status::Unr => println!("{target:?}: UNR at grid resolution"),
            }
            if let Some(w) = &v.witness {
                println!("witness: {w:?}");
            } else {
                println!("minimum over grid: {:e}", v.min_value);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Soundness(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
