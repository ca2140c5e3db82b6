//! `hhvb`: runs the verification suites and writes JSON or CSV reports.
//!
//! Exit codes: 0 when every check passes, 2 when a check fails, 3 for usage
//! or configuration errors.

mod commands;
mod report;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "hhvb", version, about = "Checks for homogeneous holomorphic vector bundles over the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Bundle spec file (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Ball dimension when no spec is given.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=4))]
    n: u64,
    /// Override the spec's λ.
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, default_value_t = 30)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[arg(long, global = true)]
    max_degree: Option<usize>,
    /// Replace every residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Lie structure, factorization and kernel identities.
    VerifyIdentities,
    /// Intertwining of the two actions by Γ, with a singular-λ probe.
    GammaIntertwine,
    /// Positivity, quasi-invariance and norm oracles of the bundle kernel.
    KernelSuite,
    /// Multiplication tuple norms, eigenvectors, homogeneity and similarity.
    TupleSuite,
    /// Regularity of a spec and bisection of positivity thresholds.
    RegularityScan,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::GammaIntertwine => "gamma-intertwine",
            Command::KernelSuite => "kernel-suite",
            Command::TupleSuite => "tuple-suite",
            Command::RegularityScan => "regularity-scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

const EXIT_FAIL: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn run(cli: Cli) -> Result<bool, ConfigError> {
    let cfg = RunConfig {
        spec: cli.spec.as_ref().map(|p| p.display().to_string()),
        n: cli.n as usize,
        lambda: cli.lambda,
        samples: cli.samples.max(1),
        seed: cli.seed,
        max_degree: cli.max_degree,
        tol: cli.tol,
    };
    if let Some(t) = cfg.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(ConfigError(format!("--tol must be a nonnegative number, got {t}")));
        }
    }
    let collected = match cli.command {
        Command::VerifyIdentities => commands::verify_identities(&cfg),
        Command::GammaIntertwine => commands::gamma_intertwine(&cfg),
        Command::KernelSuite => commands::kernel_suite(&cfg),
        Command::TupleSuite => commands::tuple_suite(&cfg),
        Command::RegularityScan => commands::regularity_scan(&cfg),
    }?;
    let report = collected.seal(cli.command.name(), &cfg, cfg.tol);
    if cli.format == Format::Csv && report.sequences.is_empty() {
        return Err(ConfigError(format!("{} produces no sequences; use --format json", cli.command.name())));
    }
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(File::create(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let written = match cli.format {
        Format::Json => report.write_json(&mut sink).map_err(|e| e.to_string()),
        Format::Csv => report.write_csv(&mut sink).map_err(|e| e.to_string()),
    };
    written.map_err(ConfigError)?;
    report.print_summary();
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
