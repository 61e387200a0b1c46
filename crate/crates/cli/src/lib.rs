//! Batch driver: configuration, orchestration and reproducible output for
//! the cascade laboratory.

pub mod check;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::SimulationConfig;
use crate::error::CliError;
use crate::output::{to_json_string, Provenance, RunDir};

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Resonance cascade laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: `<output.directory>/<command>`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reserved; nothing in the pipeline is stochastic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenbasis CSV and resonance report.
    Spectrum,
    /// Coefficient set JSON and matrix CSV.
    Coeffs,
    /// Trajectory CSV and diagnostics JSON.
    Evolve,
    /// Weak-coupling sweep report.
    Converge,
    /// Full invariant suite with a pass/fail manifest.
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Coeffs => "coeffs",
            Command::Evolve => "evolve",
            Command::Converge => "converge",
            Command::Check => "check",
        }
    }
}

fn load(path: Option<&Path>) -> Result<SimulationConfig, CliError> {
    match path {
        Some(p) => SimulationConfig::load(p),
        None => {
            let cfg = SimulationConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn execute(cli: &Cli, cfg: &SimulationConfig, out: &Path) -> Result<bool, CliError> {
    let prov = Provenance::new(cfg);
    let mut dir = RunDir::create(out)?;
    dir.write("config.toml", &cfg.to_toml())?;
    let outcome = match cli.command {
        Command::Spectrum => commands::spectrum(cfg, &mut dir, &prov)?,
        Command::Coeffs => commands::coeffs(cfg, &mut dir, &prov)?,
        Command::Evolve => commands::evolve(cfg, &mut dir, &prov)?,
        Command::Converge => commands::converge(cfg, &mut dir, &prov)?,
        Command::Check => check::check(cfg, &mut dir, &prov)?,
    };
    let status = if outcome.passed { "ok" } else { "checks-failed" };
    dir.finish(cli.command.name(), status, cfg, &prov, outcome.extra)?;
    Ok(outcome.passed)
}

/// Run one command and return the process exit code: `0` on success, `1` if
/// a check failed or on I/O errors, `2` for unreadable configuration, `3` for
/// invalid parameters and `4` for numerical failures.
pub fn run(cli: &Cli) -> i32 {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return report(&e, cli.out.as_deref()),
    };
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory).join(cli.command.name()));
    match execute(cli, &cfg, &out) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("one or more checks failed; see {}", out.join("manifest.json").display());
            1
        }
        Err(e) => report(&e, Some(&out)),
    }
}

fn report(e: &CliError, out: Option<&Path>) -> i32 {
    let record = to_json_string(&e.record());
    eprint!("{record}");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), &record);
        }
    }
    e.exit_code()
}
