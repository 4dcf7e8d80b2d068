//! Command-line front end for the dealer-model solvers.

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

pub use commands::{Report, Subcommand};
pub use config::{parse_config, Config, ConfigError};
pub use error::{CliError, CliResult};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "DEALER_THREADS";

/// Subcommand plus everything needed to resolve its configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub subcommand: Subcommand,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub overrides: Vec<String>,
    pub n_list: Vec<usize>,
}

impl CliConfig {
    /// Reads the config file (defaults if none) and applies the overrides.
    pub fn resolve(&self) -> CliResult<Config> {
        let mut cfg = match &self.config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => Config::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        Ok(cfg)
    }
}

pub fn execute(cli: &CliConfig) -> CliResult<Report> {
    let cfg = cli.resolve()?;
    dispatch(cli.subcommand, &cfg, &cli.n_list, &cli.output_dir)
}

pub fn dispatch(sub: Subcommand, cfg: &Config, n_list: &[usize], out: &Path) -> CliResult<Report> {
    match sub {
        Subcommand::Simulate => commands::cmd_simulate(cfg, out),
        Subcommand::Lattice => commands::cmd_lattice(cfg, out),
        Subcommand::MlSolve => commands::cmd_ml_solve(cfg, out),
        Subcommand::Analytic => commands::cmd_analytic(cfg, out),
        Subcommand::Compare => commands::cmd_compare(cfg, out),
        Subcommand::SweepN => commands::cmd_sweep_n(cfg, n_list, out),
    }
}

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}
