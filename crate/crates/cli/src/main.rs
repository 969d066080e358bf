use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use findscope_core::cascade::{build_zm, AlphaConstants, MAX_DEPTH};
use findscope_core::engine::{normalize, profile, sup_count, FindConfig, Variant};
use findscope_core::io;
use findscope_core::pivot::{SplitLaw, SubsampleRule};
use findscope_core::seed::replica_seed;
use findscope_core::stats::{mean, pairwise_sum};
use findscope_core::verify::{self, Battery, VerifySettings};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] findscope_core::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "findscope", version, about = "Comparison profiles of median-of-k(n) FIND and their Gaussian limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run FIND over all ranks and write the profile and its normalisation.
    Simulate(SimulateArgs),
    /// Write realisations of the truncated limit process Z_m.
    Limit(LimitArgs),
    /// Run verification batteries; exit 1 if any check is red.
    Verify(VerifyArgs),
    /// Write the pivot-rank pmf for one (n, k).
    Pmf(PmfArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args)]
struct Output {
    /// Output directory, created if missing.
    #[arg(long, env = "FINDSCOPE_OUT", default_value = ".")]
    out: PathBuf,
    #[arg(long, env = "FINDSCOPE_FORMAT", value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, env = "FINDSCOPE_N", required = true, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long, env = "FINDSCOPE_ALPHA", default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, env = "FINDSCOPE_C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, env = "FINDSCOPE_VARIANT", default_value_t = 2, value_parser = parse_variant_code)]
    variant: u8,
    #[arg(long, env = "FINDSCOPE_REPS", default_value_t = 1)]
    reps: u64,
    #[arg(long, env = "FINDSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LimitArgs {
    /// Depth of the truncated cascade, at most 24.
    #[arg(long, env = "FINDSCOPE_M", default_value_t = 10)]
    m: u32,
    #[arg(long, env = "FINDSCOPE_ALPHA", default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, env = "FINDSCOPE_REPS", default_value_t = 1)]
    reps: u64,
    #[arg(long, env = "FINDSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "FINDSCOPE_ALPHA")]
    alpha: f64,
    /// Sizes for the marginal trend; the largest also drives cov and sup.
    #[arg(long, env = "FINDSCOPE_N", required = true, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long, env = "FINDSCOPE_SEED")]
    seed: u64,
    #[arg(long, env = "FINDSCOPE_C", default_value_t = 1.0)]
    c: f64,
    /// Variant for the marginal and covariance batteries.
    #[arg(long, env = "FINDSCOPE_VARIANT", default_value_t = 2, value_parser = parse_variant_code)]
    variant: u8,
    /// Desk-scale tier (default).
    #[arg(long, conflicts_with = "full")]
    fast: bool,
    /// The tier stated by the acceptance criteria.
    #[arg(long)]
    full: bool,
    /// Replicas of the algorithm for the marginal and covariance batteries.
    #[arg(long, env = "FINDSCOPE_REPS")]
    reps: Option<u64>,
    /// Marginal grid points.
    #[arg(long, env = "FINDSCOPE_T", value_delimiter = ',')]
    t: Vec<f64>,
    /// Cascade depth for the covariance battery.
    #[arg(long, env = "FINDSCOPE_M")]
    m: Option<u32>,
    /// Offset of the variation exponents from p_alpha.
    #[arg(long, env = "FINDSCOPE_P")]
    p: Option<f64>,
    /// Batteries to run (default: all).
    #[arg(long, value_parser = parse_battery)]
    battery: Vec<Battery>,
    /// Negative control: shift the marginal-variance targets by +1.
    #[arg(long)]
    tamper: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PmfArgs {
    #[arg(long, env = "FINDSCOPE_N")]
    n: u64,
    /// Subsample size; defaults to k(n) for the given alpha and c.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, env = "FINDSCOPE_ALPHA", default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, env = "FINDSCOPE_C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, env = "FINDSCOPE_OUT", default_value = ".")]
    out: PathBuf,
}

fn parse_variant_code(s: &str) -> Result<u8, String> {
    match s {
        "2" => Ok(2),
        "3" => Ok(3),
        _ => Err("variant must be 2 or 3".into()),
    }
}

fn parse_battery(s: &str) -> Result<Battery, String> {
    Battery::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Battery::ALL.iter().map(|b| b.name()).collect();
        format!("unknown battery, expected one of {}", names.join(", "))
    })
}

fn variant_of(code: u8) -> Variant {
    Variant::from_code(code).expect("validated by the parser")
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| CliError::Io(path, e))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

#[derive(Serialize)]
struct SupRow {
    replica: u64,
    seed: u64,
    sup: u64,
    sup_normalized: f64,
    mean_comparisons: f64,
}

fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if args.n.contains(&0) {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let rule = SubsampleRule::new(args.c, args.alpha)?;
    let cfg = FindConfig::new(variant_of(args.variant), rule);
    ensure_dir(&args.output.out)?;
    let ext = args.output.format.ext();
    for &n in &args.n {
        let rows: Vec<SupRow> = findscope_core::stats::replicate(args.reps, |r| {
            let seed = replica_seed(args.seed, r);
            let p = profile(n, &cfg, seed);
            let z = normalize(&p, &rule);
            let counts: Vec<f64> = p.counts.iter().map(|&c| c as f64).collect();
            SupRow { replica: r, seed, sup: sup_count(&p), sup_normalized: z.sup(), mean_comparisons: mean(&counts) }
        });
        if args.reps == 1 {
            let p = profile(n, &cfg, rows[0].seed);
            let z = normalize(&p, &rule);
            let (pf, sf) = (format!("profile_n{n}.{ext}"), format!("normalized_n{n}.{ext}"));
            match args.output.format {
                Format::Csv => {
                    io::write_profile_csv(create(&args.output.out, &pf)?, &p)?;
                    io::write_step_csv(create(&args.output.out, &sf)?, &z)?;
                }
                Format::Json => {
                    io::write_profile_json(create(&args.output.out, &pf)?, &p)?;
                    io::write_step_json(create(&args.output.out, &sf)?, &z)?;
                }
            }
        } else {
            let name = format!("sups_n{n}.{ext}");
            match args.output.format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(create(&args.output.out, &name)?);
                    for row in &rows {
                        w.serialize(row)?;
                    }
                    w.flush().map_err(|e| CliError::Io(args.output.out.join(&name), e))?;
                }
                Format::Json => serde_json::to_writer_pretty(create(&args.output.out, &name)?, &rows)?,
            }
        }
        let sups: Vec<f64> = rows.iter().map(|r| r.sup as f64).collect();
        let means: Vec<f64> = rows.iter().map(|r| r.mean_comparisons).collect();
        println!(
            "n={n} k(n)={} reps={} sup={} mean={}",
            rule.k_of(n),
            args.reps,
            pairwise_sum(&sups) / sups.len() as f64,
            pairwise_sum(&means) / means.len() as f64
        );
    }
    Ok(())
}

fn limit(args: &LimitArgs) -> CliResult<()> {
    if args.m == 0 || args.m > MAX_DEPTH {
        return Err(CliError::Usage(format!("--m must be in 1..={MAX_DEPTH}")));
    }
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let consts = AlphaConstants::new(args.alpha)?;
    ensure_dir(&args.output.out)?;
    let ext = args.output.format.ext();
    for r in 0..args.reps {
        let seed = replica_seed(args.seed, r);
        let z = build_zm(args.m, &consts, seed)?.to_step_function();
        let name = format!("cascade_m{}_r{r}.{ext}", args.m);
        match args.output.format {
            Format::Csv => io::write_step_csv(create(&args.output.out, &name)?, &z)?,
            Format::Json => io::write_step_json(create(&args.output.out, &name)?, &z)?,
        }
        let meta = io::CascadeMeta { alpha: args.alpha, m: args.m, seed };
        io::write_cascade_meta(create(&args.output.out, &format!("cascade_m{}_r{r}.meta.json", args.m))?, &meta)?;
        println!("replica {r}: seed={seed} pieces={} sup={}", z.len(), z.sup());
    }
    Ok(())
}

fn verify_settings(args: &VerifyArgs) -> CliResult<VerifySettings> {
    let mut s = if args.full {
        VerifySettings::full(args.alpha, args.c, args.seed)
    } else {
        VerifySettings::fast(args.alpha, args.c, args.seed)
    };
    s.ns = args.n.clone();
    s.variant = variant_of(args.variant);
    s.tamper = args.tamper;
    if let Some(reps) = args.reps {
        s.marginal_reps = reps;
        s.cov_reps = reps;
    }
    if !args.t.is_empty() {
        s.marginal_ts = args.t.clone();
    }
    if let Some(m) = args.m {
        if !(4..=MAX_DEPTH).contains(&m) {
            return Err(CliError::Usage(format!("--m must be in 4..={MAX_DEPTH} for verify")));
        }
        s.cascade_depth = m;
    }
    if let Some(p) = args.p {
        if !(p > 0.0 && p < s.consts()?.p_alpha - 1.0) {
            return Err(CliError::Usage("--p must be positive and keep p_alpha - p above 1".into()));
        }
        s.p_offset = p;
    }
    s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

fn run_verify(args: &VerifyArgs) -> CliResult<bool> {
    let settings = verify_settings(args)?;
    let batteries: Vec<Battery> = if args.battery.is_empty() { Battery::ALL.to_vec() } else { args.battery.clone() };
    ensure_dir(&args.output.out)?;
    let report = verify::run(&settings, &batteries)?;

    serde_json::to_writer_pretty(create(&args.output.out, "verify.json")?, &report)?;
    let reports = report.reports();
    match args.output.format {
        Format::Csv => io::write_reports_csv(create(&args.output.out, "reports.csv")?, &reports)?,
        Format::Json => io::write_reports_json(create(&args.output.out, "reports.json")?, &reports)?,
    }

    println!("jump index reading: {}", report.jump_reading);
    for c in &report.checks {
        println!("{} {:<4} {:<12} {} | {}", verdict(c.passed), c.criterion, c.battery.name(), c.name, c.detail);
    }
    let failing: Vec<_> = report.failing().collect();
    if failing.is_empty() {
        println!("all {} checks green", report.checks.len());
    } else {
        println!("\n{} of {} checks red:", failing.len(), report.checks.len());
        for c in failing {
            println!("  {:<4} {:<12} {} | {}", c.criterion, c.battery.name(), c.name, c.detail);
        }
    }
    Ok(report.all_passed())
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn pmf(args: &PmfArgs) -> CliResult<()> {
    let rule = SubsampleRule::new(args.c, args.alpha)?;
    let k = args.k.unwrap_or_else(|| rule.k_of(args.n));
    let law = SplitLaw::new(args.n, k)?;
    ensure_dir(&args.out)?;
    io::write_pmf_csv(create(&args.out, &format!("pmf_n{}_k{k}.csv", args.n))?, &law)?;
    println!("n={} k={k} mean={} variance={}", args.n, law.mean(), law.variance());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Limit(a) => limit(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
        Command::Pmf(a) => pmf(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
