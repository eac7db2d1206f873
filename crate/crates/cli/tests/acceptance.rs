//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use awd_core::ablation::{guard_wd, plain_wd};
use awd_core::affinity::{
    encode, from_ordered_index, lex_compare, ordered_index, MAX_OPERAND_DISTANCE,
};
use awd_core::corpus::corpus;
use awd_core::exec::{prepare_inputs, trace, EvalError};
use awd_core::verify::{input_box, oracle_verify};
use awd_core::{
    awd_evaluate, basinhopping_from, compile, kappa, powell_minimize, replay, run_suite, scale_v,
    synthesize_paths, verify, BranchStep, Manifest, OptimizerConfig, PartialPath, Program, Status,
    SuiteConfig, SynthesisConfig, VerifyConfig, DEFAULT_STEP_BUDGET, M,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn programs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/programs")
}

fn awd_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_awd"))
}

fn load(name: &str) -> Program {
    let text = std::fs::read_to_string(programs().join(name)).expect("sample program");
    compile(&text).expect("sample parses")
}

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("awd-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(started: Instant, limit: Duration) -> Result<(), String> {
    let t = started.elapsed();
    check(t < limit, format!("took {t:.2?}, limit {limit:?}"))
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let json = scratch_dir().join("check_sum.json");
    let out = awd_bin()
        .arg("verify")
        .arg(programs().join("check_sum.awd"))
        .args(["--target", "Unexpected", "--seed", "1", "--json"])
        .arg(&json)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), format!("exit status {}", out.status))?;
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    check(v["verdict"] == "REA", format!("verdict {}", v["verdict"]))?;
    check(
        v["min_value"] == 0.0,
        format!("min_value {}", v["min_value"]),
    )?;
    let w = v["witness"][0].as_f64().ok_or("no witness")?;
    check(4.0 < w && w < 5.0, format!("witness {w} outside (4, 5)"))?;

    let p = load("check_sum.awd");
    check(
        replay(&p, &[w], "Unexpected", DEFAULT_STEP_BUDGET).unwrap_or(false),
        "witness replay misses the target",
    )?;
    let paths = synthesize_paths(&p, "Unexpected", &SynthesisConfig::default())
        .map_err(|e| e.to_string())?;
    let d_cli = awd_evaluate(&p, &paths.paths[0], &[w], DEFAULT_STEP_BUDGET)
        .map_err(|e| e.to_string())?
        .d;
    let d_known = awd_evaluate(
        &p,
        &paths.paths[0],
        &[4.999999999999999],
        DEFAULT_STEP_BUDGET,
    )
    .map_err(|e| e.to_string())?
    .d;
    check(
        d_cli == 0.0 && d_known == 0.0,
        format!("AWD at witness {d_cli}, at 4.999999999999999 {d_known}"),
    )?;
    within(started, Duration::from_secs(5))?;
    Ok(format!("witness {w:?}, AWD 0, {:.2?}", started.elapsed()))
}

/// Small steps from (1, 1) with no restarts: the budget both objectives share.
fn ablation_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        hops: 50,
        step_scale: 0.02,
        restarts: 0,
        rng_seed: seed,
        ..OptimizerConfig::default()
    }
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let p = load("check_date.awd");
    let v = verify(&p, "reached", &VerifyConfig::default()).map_err(|e| e.to_string())?;
    check(v.status == Status::Rea, "check_date not REA")?;
    let w = v.witness.ok_or("no witness")?;
    check(
        prepare_inputs(&p, &w) == vec![20.0, 10.0],
        format!("witness {w:?} does not floor to (20, 10)"),
    )?;

    let path = PartialPath {
        steps: vec![BranchStep::new(0, true), BranchStep::new(1, true)],
        target: "reached".into(),
    };
    let bx = input_box(&p);
    let (mut wd_zero, mut awd_zero) = (0, 0);
    for seed in 0..10 {
        let cfg = ablation_config(seed);
        let wd = |x: &[f64]| plain_wd(&p, &path, x, DEFAULT_STEP_BUDGET).unwrap_or(f64::MAX);
        let r = basinhopping_from(wd, &bx, &cfg, Some(&[1.0, 1.0])).map_err(|e| e.to_string())?;
        wd_zero += usize::from(r.best_value == 0.0);
        let awd =
            |x: &[f64]| awd_evaluate(&p, &path, x, DEFAULT_STEP_BUDGET).map_or(3.0 * M, |o| o.d);
        let r = basinhopping_from(awd, &bx, &cfg, Some(&[1.0, 1.0])).map_err(|e| e.to_string())?;
        awd_zero += usize::from(r.best_value == 0.0);
    }
    check(
        wd_zero <= 1,
        format!("plain WD reached zero in {wd_zero}/10 runs"),
    )?;
    within(started, Duration::from_secs(10))?;
    Ok(format!(
        "witness {w:?}; plain WD zero in {wd_zero}/10, AWD zero in {awd_zero}/10 under the same budget"
    ))
}

fn criterion_3() -> Outcome {
    let p = load("cot.awd");
    let cfg = VerifyConfig {
        optimizer: OptimizerConfig {
            rng_seed: 3,
            ..OptimizerConfig::default()
        },
        ..VerifyConfig::default()
    };
    let v = verify(&p, "reach 0", &cfg).map_err(|e| e.to_string())?;
    check(v.status == Status::Rea, "cot not REA")?;
    let w = v.witness.ok_or("no witness")?;
    check(w == vec![0.0], format!("witness {w:?} is not x = 0.0"))?;
    let deciding = &v.per_path.last().ok_or("no path results")?.path;
    let tan_zero = vec![BranchStep::new(0, false), BranchStep::new(1, true)];
    check(
        deciding.steps == tan_zero,
        format!("zero found on path {deciding}"),
    )?;

    // single objective over both paths, local search from x = 1.0
    let mono = |x: &[f64]| {
        guard_wd(&p, BranchStep::new(1, true), x, DEFAULT_STEP_BUDGET).unwrap_or(f64::MAX)
    };
    let r = powell_minimize(mono, &[1.0], &input_box(&p), &OptimizerConfig::default())
        .map_err(|e| e.to_string())?;
    let x = r.best_x[0];
    Ok(format!(
        "per-path witness x = {:?} on {deciding}; single objective from 1.0 ended at x = {x:.6} \
         (|x - pi/2| = {:.2e}, value {:.2e}, reported x = 0: {})",
        w[0],
        (x - std::f64::consts::FRAC_PI_2).abs(),
        r.best_value,
        x == 0.0
    ))
}

/// Affinity of `x` for `path` computed from an uninstrumented trace.
fn trace_affinity(
    p: &Program,
    path: &PartialPath,
    x: &[f64],
) -> Result<Option<(u64, f64)>, EvalError> {
    let t = trace(p, x, DEFAULT_STEP_BUDGET)?;
    for (i, want) in path.steps.iter().enumerate() {
        let u = (path.len() - i) as u64;
        let Some(got) = t.entries.get(i) else {
            return Ok(Some((u, scale_v(MAX_OPERAND_DISTANCE))));
        };
        if got.step == *want {
            continue;
        }
        if got.step.label != want.label {
            return Ok(Some((u, scale_v(MAX_OPERAND_DISTANCE))));
        }
        let op = if want.taken { got.op } else { got.op.negate() };
        let v = if op == awd_core::CmpOp::Ne {
            1
        } else {
            match kappa(got.lhs, got.rhs) {
                Ok(k) if matches!(op, awd_core::CmpOp::Lt | awd_core::CmpOp::Gt) => k as u128 + 1,
                Ok(k) => k as u128,
                Err(_) => MAX_OPERAND_DISTANCE,
            }
        };
        return Ok(Some((u, scale_v(v))));
    }
    Ok(None)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut triples, mut zeros, mut pairs) = (0usize, 0usize, 0usize);
    for g in corpus(4, 500) {
        let p = compile(&g.source).map_err(|e| e.to_string())?;
        let bx = input_box(&p);
        let consts = p.constants();
        for t in &g.targets {
            let syn =
                synthesize_paths(&p, t, &SynthesisConfig::default()).map_err(|e| e.to_string())?;
            for path in &syn.paths {
                let mut samples: Vec<((u64, f64), f64)> = Vec::new();
                for _ in 0..8 {
                    let x: Vec<f64> = (0..bx.dim())
                        .map(|i| {
                            if rng.gen_bool(0.3) && !consts.is_empty() {
                                let c = consts[rng.gen_range(0..consts.len())];
                                let c = if rng.gen_bool(0.5) { c } else { -c };
                                [c, c.next_up(), c.next_down()][rng.gen_range(0..3)]
                                    .clamp(bx.lo[i], bx.hi[i])
                            } else {
                                rng.gen_range(bx.lo[i]..=bx.hi[i])
                            }
                        })
                        .collect();
                    let Ok(out) = awd_evaluate(&p, path, &x, DEFAULT_STEP_BUDGET) else {
                        continue;
                    };
                    let realized = trace(&p, &x, DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
                    let steps: Vec<BranchStep> = realized.entries.iter().map(|e| e.step).collect();
                    triples += 1;
                    check(
                        out.d >= 0.0,
                        format!("negative AWD {} in\n{}", out.d, g.source),
                    )?;
                    check(
                        (out.d == 0.0) == path.is_prefix_of(&steps),
                        format!("zero/prefix mismatch at {x:?} for {path} in\n{}", g.source),
                    )?;
                    zeros += usize::from(out.d == 0.0);
                    let aff = trace_affinity(&p, path, &x)
                        .map_err(|e| e.to_string())?
                        .unwrap_or((0, 0.0));
                    let expected = encode(aff.0, aff.1).map_err(|e| e.to_string())?;
                    check(
                        out.d == expected,
                        format!(
                            "AWD {} differs from trace affinity {aff:?} at {x:?}\n{}",
                            out.d, g.source
                        ),
                    )?;
                    samples.push((aff, out.d));
                }
                for a in &samples {
                    for b in &samples {
                        if lex_compare(a.0, b.0).is_lt() {
                            pairs += 1;
                            check(
                                a.1 < b.1,
                                format!("MCC violated: {a:?} vs {b:?}\n{}", g.source),
                            )?;
                        }
                    }
                }
            }
        }
    }
    check(triples >= 10_000, format!("only {triples} triples sampled"))?;
    Ok(format!(
        "{triples} triples ({zeros} zeros), {pairs} ordered pairs, 0 violations"
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ordered = 0;
    for _ in 0..100_000 {
        let p = (rng.gen_range(0..64u64), rng.gen_range(0.0..M));
        let q = (rng.gen_range(0..64u64), rng.gen_range(0.0..M));
        let (ep, eq) = (encode(p.0, p.1).unwrap(), encode(q.0, q.1).unwrap());
        match lex_compare(p, q) {
            std::cmp::Ordering::Less => check(ep < eq, format!("{p:?} < {q:?} but {ep} >= {eq}"))?,
            std::cmp::Ordering::Greater => {
                check(ep > eq, format!("{p:?} > {q:?} but {ep} <= {eq}"))?
            }
            std::cmp::Ordering::Equal => {}
        }
        ordered += 1;
    }
    Ok(format!("{ordered} pairs, 0 violations"))
}

fn walk_count(a: f64, b: f64) -> u64 {
    let (mut x, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut n = 0;
    while x < hi {
        x = x.next_up();
        if x == 0.0 {
            x = 0.0;
        }
        n += 1;
    }
    n
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..1000 {
        let a = match i % 4 {
            0 => rng.gen_range(-1e3..1e3),
            1 => rng.gen_range(-1e-300..1e-300),
            2 => {
                f64::from_bits(rng.gen_range(0..20_000))
                    * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            }
            _ => rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-30..30)),
        };
        let k = rng.gen_range(0..=10_000i64);
        let b = from_ordered_index(ordered_index(a) + if rng.gen_bool(0.5) { k } else { -k });
        let want = walk_count(a, b);
        check(want <= 10_000, "constructed pair exceeds 10^4")?;
        let got = kappa(a, b).map_err(|e| e.to_string())?;
        check(
            got == want,
            format!("kappa({a:e}, {b:e}) = {got}, walk {want}"),
        )?;
    }
    check(kappa(1.0, 2.0) == Ok(1u64 << 52), "kappa(1, 2) != 2^52")?;
    Ok("1000 pairs match the walk; kappa(1.0, 2.0) = 2^52".into())
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let programs = corpus(7, 200);
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Result<(usize, usize), String>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(g) = programs.get(i) else { break };
                        out.push(differential(i, &g.source, &g.targets));
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker"))
            .collect()
    });
    let (mut targets, mut oracle_rea) = (0, 0);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok((t, o)) => {
                targets += t;
                oracle_rea += o;
            }
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(format!(
            "{} programs disagree; first:\n{}",
            failures.len(),
            failures.join("\n")
        ));
    }
    within(started, Duration::from_secs(300))?;
    Ok(format!(
        "200 programs, {targets} targets, {oracle_rea} oracle REA all matched, {:.1?}",
        started.elapsed()
    ))
}

fn differential(i: usize, source: &str, targets: &[String]) -> Result<(usize, usize), String> {
    let p = compile(source).map_err(|e| e.to_string())?;
    let grid = if p.dimension() == 1 { 2001 } else { 101 };
    let mut rea = 0;
    for t in targets {
        let o = oracle_verify(&p, t, grid, DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
        let cfg = VerifyConfig {
            optimizer: OptimizerConfig {
                rng_seed: i as u64,
                ..OptimizerConfig::default()
            },
            ..VerifyConfig::default()
        };
        let v =
            verify(&p, t, &cfg).map_err(|e| format!("program {i} target {t}: {e}\n{source}"))?;
        if o.status == Status::Rea {
            rea += 1;
            check(
                v.status == Status::Rea,
                format!(
                    "program {i} target {t}: oracle REA at {:?}, verify UNR (min {})\n{source}",
                    o.witness, v.min_value
                ),
            )?;
        }
    }
    Ok((targets.len(), rea))
}

fn suite_manifest() -> PathBuf {
    programs().join("suite/manifest.jsonl")
}

fn criterion_8() -> Outcome {
    let m = Manifest::load(&suite_manifest()).map_err(|e| e.to_string())?;
    check(
        m.entries.len() == 12,
        format!("{} entries", m.entries.len()),
    )?;
    let cfg = SuiteConfig {
        timings: true,
        ..SuiteConfig::default()
    };
    let r = run_suite(&m, &cfg);
    for e in &r.entries {
        check(
            e.correct(),
            format!(
                "{}: expected {}, got {:?} {:?}",
                e.name, e.expected, e.verdict, e.error
            ),
        )?;
    }
    let mean = r.summary.mean_wall_time_s.unwrap_or(f64::INFINITY);
    check(mean < 5.0, format!("mean wall time {mean:.2}s"))?;
    Ok(format!("accuracy 12/12, mean wall time {mean:.3}s"))
}

fn criterion_9() -> Outcome {
    let dir = scratch_dir();
    let mut reports = Vec::new();
    for run in 0..2 {
        let json = dir.join(format!("bench-{run}.json"));
        let out = awd_bin()
            .arg("bench")
            .arg(suite_manifest())
            .args(["--seed", "42", "--json"])
            .arg(&json)
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), format!("exit status {}", out.status))?;
        reports.push(std::fs::read(&json).map_err(|e| e.to_string())?);
    }
    check(reports[0] == reports[1], "reports differ")?;
    Ok(format!("two runs, {} identical bytes", reports[0].len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("check_sum worked example", criterion_1),
        ("check_date worked example and WD ablation", criterion_2),
        ("cot per-path example", criterion_3),
        ("AWD axioms on the generated corpus", criterion_4),
        ("encoder preserves lexicographic order", criterion_5),
        ("kappa against the next-value walk", criterion_6),
        (
            "differential verification against the grid oracle",
            criterion_7,
        ),
        ("bundled benchmark suite", criterion_8),
        ("bench report determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    let _ = std::fs::remove_dir_all(scratch_dir());
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
