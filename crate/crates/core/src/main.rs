use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcurrent::harness::{self, ExperimentConfig, ExperimentKind};
use rcurrent::Error;

/// Default output root when neither `--out` nor the config sets one.
const OUT_ENV: &str = "RCURRENT_OUT";

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUN: u8 = 3;

#[derive(Parser)]
#[command(name = "rcurrent", version, about = "Random current verification suites and Monte Carlo scans")]
struct Cli {
    /// Print every experiment kind with its required config fields.
    #[arg(long)]
    list_experiments: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config; verification kinds run with defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the seed list and the corpus seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; falls back to the config, then $RCURRENT_OUT, then ./results.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Total Monte Carlo sweeps per chain.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    VerifyIdentities(RunArgs),
    VerifySwitching(RunArgs),
    VerifyPfaffian(RunArgs),
    GsMatch(RunArgs),
    McRun(RunArgs),
    ScanRl(RunArgs),
    LocateBetac(RunArgs),
    S2Diagnostics(RunArgs),
    IntersectionScan(RunArgs),
    EmergentPlanarity(RunArgs),
    /// Re-run a stored experiment and compare records bit for bit.
    Replay { dir: PathBuf },
}

impl Command {
    fn kind(&self) -> Option<(ExperimentKind, &RunArgs)> {
        use ExperimentKind as K;
        Some(match self {
            Command::VerifyIdentities(a) => (K::VerifyIdentities, a),
            Command::VerifySwitching(a) => (K::VerifySwitching, a),
            Command::VerifyPfaffian(a) => (K::VerifyPfaffian, a),
            Command::GsMatch(a) => (K::GsMatch, a),
            Command::McRun(a) => (K::McRun, a),
            Command::ScanRl(a) => (K::ScanRl, a),
            Command::LocateBetac(a) => (K::LocateBetac, a),
            Command::S2Diagnostics(a) => (K::S2Diagnostics, a),
            Command::IntersectionScan(a) => (K::IntersectionScan, a),
            Command::EmergentPlanarity(a) => (K::EmergentPlanarity, a),
            Command::Replay { .. } => return None,
        })
    }
}

fn list_experiments() {
    for k in ExperimentKind::ALL {
        let fields = k.required_fields();
        let fields = if fields.is_empty() { "(none)".to_string() } else { fields.join(", ") };
        println!("{:<20} {fields}", k.name());
    }
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> rcurrent::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path, Some(kind))?,
        None => ExperimentConfig::new(kind),
    };
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
        cfg.corpus.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(sweeps) = args.budget {
        cfg.budget.sweeps = sweeps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn default_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"))
}

fn run_kind(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let cfg = match build_config(kind, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match harness::run(&cfg, &default_root()) {
        Ok(r) => r,
        Err(Error::Config(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUN);
        }
    };
    let m = &report.manifest;
    println!("{} records in {}", m.records, report.dir.display());
    if let Some(s) = &m.summary {
        for (name, st) in &s.by_check {
            println!("  {name:<22} {:>6} checks  {:>3} failed  worst {:.3e}", st.checks, st.failures, st.worst);
        }
        println!("verification {}", if s.passed { "PASSED" } else { "FAILED" });
    }
    if let Some(f) = &m.failure {
        eprintln!("run stopped early: {f}");
        return ExitCode::from(EXIT_RUN);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    }
}

fn replay(dir: &Path) -> ExitCode {
    match harness::replay(dir) {
        Ok(n) => {
            println!("replay identical: {n} records");
            ExitCode::SUCCESS
        }
        Err(Error::ReplayMismatch(msg)) => {
            eprintln!("replay mismatch: {msg}");
            ExitCode::from(EXIT_VERIFY_FAILED)
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUN)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_experiments {
        list_experiments();
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: no subcommand given; see --help or --list-experiments");
        return ExitCode::from(EXIT_CONFIG);
    };
    match &cmd {
        Command::Replay { dir } => replay(dir),
        other => {
            let (kind, args) = other.kind().expect("experiment subcommand");
            run_kind(kind, args)
        }
    }
}
