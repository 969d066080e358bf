//! Acceptance run: every criterion at its stated scale and tolerance, one
//! PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_RED` are reported as FAIL like any other but do
//! not fail the target; any other failure does.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use findscope_core::verify::{run_battery, Battery, Check, VerifySettings};

const SEED: u64 = 42;

/// Red at the stated scale; the reasons are in the README.
const KNOWN_RED: [&str; 3] = ["AC3", "AC4", "AC6"];

struct Criterion {
    id: &'static str,
    title: &'static str,
    batteries: &'static [Battery],
    budget: Duration,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: "AC1", title: "exact split law", batteries: &[Battery::Split], budget: Duration::from_secs(10) },
    Criterion { id: "AC2", title: "profile equals single-rank runs", batteries: &[Battery::Equivalence], budget: Duration::from_secs(60) },
    Criterion { id: "AC3", title: "marginal limit of Y_n(0.3)", batteries: &[Battery::Marginal], budget: Duration::from_secs(15 * 60) },
    Criterion { id: "AC4", title: "cross-rank covariance", batteries: &[Battery::Cov], budget: Duration::from_secs(15 * 60) },
    Criterion { id: "AC5", title: "cascade covariance", batteries: &[Battery::Cascade], budget: Duration::from_secs(2 * 60) },
    Criterion { id: "AC6", title: "sup triangle and tail", batteries: &[Battery::Sup, Battery::Tail], budget: Duration::from_secs(10 * 60) },
    Criterion { id: "AC7", title: "jump-law resolution", batteries: &[Battery::Jump], budget: Duration::from_secs(10 * 60) },
    Criterion { id: "AC8", title: "variation dichotomy", batteries: &[Battery::Variation], budget: Duration::from_secs(5 * 60) },
    Criterion { id: "AC9", title: "modulus band", batteries: &[Battery::Modulus], budget: Duration::from_secs(5 * 60) },
];

fn line(id: &str, passed: bool, title: &str, note: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let known = if !passed && KNOWN_RED.contains(&id) { " (known)" } else { "" };
    println!("{id:<4} {tag}{known}  {title}  {note}");
}

fn findscope(dir: &Path, threads: &str, args: &[&str]) -> Vec<u8> {
    let o = Command::new(env!("CARGO_BIN_EXE_findscope"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .expect("binary runs");
    let mut bytes = o.stdout;
    bytes.extend(format!("exit {:?}\n", o.status.code()).bytes());
    bytes
}

/// Every output file and the stdout of a fixed command set.
fn snapshot(threads: &str) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().expect("tempdir");
    let commands: [&[&str]; 4] = [
        &["simulate", "--n", "100000", "--n", "1000", "--variant", "3", "--seed", "7"],
        &["simulate", "--n", "2000", "--reps", "16", "--seed", "7", "--format", "json"],
        &["limit", "--m", "12", "--reps", "3", "--seed", "7"],
        &["verify", "--alpha", "0.5", "--n", "1000", "--n", "5000", "--seed", "7", "--battery", "cascade", "--battery", "cov", "--battery", "jump"],
    ];
    let mut out = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        out.push((format!("stdout {i}"), findscope(dir.path(), threads, args)));
    }
    let mut files: Vec<_> = std::fs::read_dir(dir.path()).expect("listing").map(|e| e.expect("entry").path()).collect();
    files.sort();
    for f in files {
        out.push((f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&f).expect("readable")));
    }
    out
}

fn main() -> ExitCode {
    let settings = VerifySettings::full(0.5, 1.0, SEED);
    let mut unexpected = Vec::new();
    let mut details: Vec<(String, Vec<Check>)> = Vec::new();

    for c in &CRITERIA {
        let start = Instant::now();
        let mut checks = Vec::new();
        for &b in c.batteries {
            match run_battery(&settings, b) {
                Ok(cs) => checks.extend(cs),
                Err(e) => {
                    println!("{} error in battery {}: {e}", c.id, b.name());
                    return ExitCode::FAILURE;
                }
            }
        }
        let elapsed = start.elapsed();
        let own: Vec<Check> = checks.into_iter().filter(|k| k.criterion == c.id).collect();
        let in_time = elapsed <= c.budget;
        let passed = !own.is_empty() && own.iter().all(|k| k.passed) && in_time;
        let red = own.iter().filter(|k| !k.passed).count();
        let note = format!("[{}/{} checks, {:.1}s of {}s]", own.len() - red, own.len(), elapsed.as_secs_f64(), c.budget.as_secs());
        line(c.id, passed, c.title, &note);
        if !passed && !KNOWN_RED.contains(&c.id) {
            unexpected.push(c.id);
        }
        details.push((c.id.to_string(), own));
    }

    let start = Instant::now();
    let reference = snapshot("1");
    let same_rerun = snapshot("1") == reference;
    let same_threads = snapshot("4") == reference;
    let passed = same_rerun && same_threads;
    line(
        "AC10",
        passed,
        "byte-identical outputs",
        &format!(
            "[{} artefacts; rerun {}, 1 vs 4 threads {}; {:.1}s]",
            reference.len(),
            if same_rerun { "identical" } else { "differs" },
            if same_threads { "identical" } else { "differs" },
            start.elapsed().as_secs_f64()
        ),
    );
    if !passed {
        unexpected.push("AC10");
    }

    println!();
    for (id, checks) in &details {
        for k in checks {
            println!("  {id:<4} {} {} | {}", if k.passed { "ok  " } else { "red " }, k.name, k.detail);
        }
    }

    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("\nunexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
