//! Experiment runner: converge, iterations, spectrum and solve commands
//! writing CSV tables.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::linsolve::LinsolveError;
use crate::problem::ProblemError;

pub use commands::{run, run_converge, run_iterations, run_solve, run_spectrum, IterationRecord, Report, SpectrumSample};
pub use config::{parse_size_list, snap_size, Command, ExperimentConfig, SmootherKind};
pub use output::{sibling_path, write_atomic, CsvTable};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {1}", .0.display())]
    Io(PathBuf, #[source] std::io::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Linsolve(#[from] LinsolveError),
}

/// Command-line flags; each one overrides the matching config-file key.
#[derive(Debug, Parser)]
#[command(name = "degdiff", version, about = "Implicit Newton-Krylov experiments for degenerate diffusion")]
pub struct Args {
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub m: Option<String>,
    /// Comma-separated interior sizes per direction
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long = "dt-coeff")]
    pub dt_coeff: Option<String>,
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub precond: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Log level: error, warn, info, debug or trace
    #[arg(long, default_value = "warn")]
    pub log: log::LevelFilter,
}

impl Args {
    /// Config file first, then flags, then `--set` pairs; sizes are snapped.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
            cfg.apply_text(&text)?;
        }
        if let Some(c) = self.command {
            cfg.command = c;
        }
        let flags = [
            ("dim", self.dim.map(|d| d.to_string())),
            ("m", self.m.clone()),
            ("N", self.n.clone()),
            ("dt_coeff", self.dt_coeff.clone()),
            ("solver", self.solver.clone()),
            ("precond", self.precond.clone()),
            ("tol", self.tol.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{pair}'")))?;
            cfg.set(k, v)?;
        }
        cfg.snap_sizes();
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the resolved configuration and writes its tables. Exit code 0 iff
/// every run converged, 1 when some run failed, 2 on configuration or I/O
/// errors.
pub fn main_with(args: &Args) -> i32 {
    let cfg = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    log::info!("seed = {}", cfg.seed);
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match report.write(cfg.output.as_ref()) {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    }
    if report.converged {
        0
    } else {
        eprintln!("some runs did not converge");
        1
    }
}
