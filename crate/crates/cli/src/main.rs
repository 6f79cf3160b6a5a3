//! `qsteg` command-line driver.
//!
//! Exit status: 0 when every pass/fail flag in the output passes, 1 when some
//! check fails, 2 on usage or configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsteg::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "qsteg", version, about = "Quantum steganography rates, simulations and verifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate achievable-rate expressions.
    Rates {
        which: RateKind,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build and audit stego protocol instances.
    Simulate {
        which: SimKind,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the inequality verifiers.
    Verify {
        which: VerifyKind,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RateKind {
    CcNoiseless,
    CcNoisy,
    Gaussian,
    Product,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    CcNoiseless,
    CcNoisy,
    CcEs,
    EsRs,
    QcCc,
    Resolvability,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Gentle,
    PjBound,
    Sutherland,
    RandomCode,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; defaults to the built-in config for the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for `<kind>.csv` and `<kind>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the CSV table to stdout (default when neither --out nor --json is given).
    #[arg(long)]
    csv: bool,
    /// Print the JSON summary to stdout.
    #[arg(long)]
    json: bool,
}

macro_rules! builtin {
    ($name:literal) => {
        ($name, include_str!(concat!("../../../configs/", $name, ".json")))
    };
}

const BUILTIN: &[(&str, &str)] = &[
    builtin!("rate_cc_noiseless"),
    builtin!("rate_cc_noisy"),
    builtin!("rate_gaussian"),
    builtin!("rate_product"),
    builtin!("simulate_cc_noiseless"),
    builtin!("simulate_cc_noisy"),
    builtin!("simulate_cc_es"),
    builtin!("simulate_es_rs"),
    builtin!("simulate_qc_cc"),
    builtin!("simulate_resolvability"),
    builtin!("verify_gentle"),
    builtin!("verify_pj_bound"),
    builtin!("verify_sutherland"),
    builtin!("verify_random_code"),
];

fn value_name<V: ValueEnum>(v: &V) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

/// Experiment kind for a subcommand, e.g. `rates gaussian` -> `rate-gaussian`.
fn kind_of(cmd: &Command) -> (String, &RunArgs) {
    match cmd {
        Command::Rates { which, run } => (format!("rate-{}", value_name(which)), run),
        Command::Simulate { which, run } => (format!("simulate-{}", value_name(which)), run),
        Command::Verify { which, run } => (format!("verify-{}", value_name(which)), run),
    }
}

fn load(kind: &str, run: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &run.config {
        Some(path) => experiment::load_config(path).map_err(|e| e.to_string())?,
        None => {
            let key = kind.replace('-', "_");
            let (_, text) = BUILTIN.iter().find(|(n, _)| *n == key).ok_or_else(|| format!("no built-in config for {kind}"))?;
            experiment::parse_config(text).map_err(|e| format!("built-in {key}: {e}"))?
        }
    };
    if cfg.kind() != kind {
        return Err(format!("config kind `{}` does not match subcommand `{kind}`", cfg.kind()));
    }
    if let Some(s) = run.seed {
        cfg.set_seed(s);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, run) = kind_of(&cli.command);
    let cfg = match load(&kind, run) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qsteg: {e}");
            return ExitCode::from(2);
        }
    };
    let out = match experiment::run_experiment(&cfg, run.out.as_deref()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("qsteg: {kind}: {e}");
            return ExitCode::from(2);
        }
    };
    if run.csv || (run.out.is_none() && !run.json) {
        print!("{}", out.csv);
    }
    if run.json {
        println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary serializes"));
    }
    for p in &out.written {
        eprintln!("qsteg: wrote {}", p.display());
    }
    eprintln!("qsteg: {kind}: {} rows, {} failed", out.summary.rows, out.summary.failed_rows);
    if out.summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
