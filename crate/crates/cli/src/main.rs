use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kslie_core::liesystem::MIN_FIT_SAMPLES;
use kslie_core::ConservedQuantityId;
use serde::Serialize;

mod config;
mod simulate;
mod superpose;
mod verify;

use config::{ConfigError, RunConfig};
use verify::CheckId;

/// Verification and simulation toolkit for the 4-symplectic diffusion Lie system.
#[derive(Debug, Parser)]
#[command(name = "kslie", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the structural identity checks and print a JSON report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Integrate the configured initial conditions; writes `<prefix>.csv` and `<prefix>.json`.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Reconstruct the first copy from the second and write a JSON report.
    Superpose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Check,
    Config(ConfigError),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Verify { config, seed, samples } => cmd_verify(&config, seed, samples),
        Command::Simulate { config, out_prefix } => cmd_simulate(&config, &out_prefix),
        Command::Superpose { config, out } => cmd_superpose(&config, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("runtime failure: {e}");
            ExitCode::from(3)
        }
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn cmd_verify(path: &Path, seed: Option<u64>, samples: Option<usize>) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = samples {
        if n == 0 {
            return Err(ConfigError { path: "--samples".into(), message: "must be at least 1".into() }.into());
        }
        cfg.samples = n;
    }
    let checks = cfg.checks.clone().unwrap_or_else(|| CheckId::ALL.to_vec());
    let fits = checks.iter().any(|c| matches!(c, CheckId::StructureFit | CheckId::AntiHomomorphism));
    if fits && cfg.samples < MIN_FIT_SAMPLES {
        return Err(ConfigError {
            path: "samples".into(),
            message: format!("the structure-constant fit needs at least {MIN_FIT_SAMPLES} points"),
        }
        .into());
    }
    let report = verify::run(&checks, cfg.seed, cfg.samples, cfg.tolerance).map_err(Failure::Runtime)?;
    print_json(&report);
    if report.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_simulate(path: &Path, prefix: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(path)?;
    let init = cfg.prolonged(1, usize::MAX)?;
    let ids = match (&cfg.conserved, init.m()) {
        (Some(ids), 2) => ids.clone(),
        (Some(ids), m) if !ids.is_empty() => {
            return Err(ConfigError {
                path: "conserved".into(),
                message: format!("conserved quantities need exactly two initial conditions, got {m}"),
            }
            .into());
        }
        (Some(_), _) => Vec::new(),
        (None, 2) => ConservedQuantityId::ALL.to_vec(),
        (None, _) => Vec::new(),
    };
    let report = simulate::run(
        &init,
        &cfg.coeffs()?,
        &cfg.integrator,
        &ids,
        cfg.tolerance_or(simulate::DRIFT_TOLERANCE),
        prefix,
    )
    .map_err(Failure::Runtime)?;
    print_json(&report);
    if report.pass() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_superpose(path: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(path)?;
    let init = cfg.prolonged(2, 2)?;
    let report = superpose::run(
        &init,
        &cfg.coeffs()?,
        &cfg.integrator,
        &cfg.newton,
        cfg.tolerance_or(superpose::RECONSTRUCTION_TOLERANCE),
    )
    .map_err(Failure::Runtime)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    std::fs::write(out, text).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    println!(
        "max reconstruction error {:e} (tolerance {:e}), max condition {:e}, {} Newton failures",
        report.max_residual, report.tolerance, report.max_condition, report.newton_failures
    );
    if report.newton_failures > 0 {
        Err(Failure::Runtime(format!("{} samples failed to reconstruct", report.newton_failures)))
    } else if report.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
