use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use dealer_cli::commands::DEFAULT_N_LIST;
use dealer_cli::{configure_threads, execute, CliConfig, Subcommand};

/// Monte Carlo, master-equation, lattice and closed-form solutions of the
/// stochastic dealer model.
#[derive(Parser)]
#[command(name = "dealer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Monte Carlo ensemble: relative-price density, intervals, COM diffusion.
    Simulate(Common),
    /// Lattice steady state and its diffusive limit (u2 = 0 only).
    Lattice(Common),
    /// Steady state of the reduced master equation.
    MlSolve(Common),
    /// Closed-form profiles on the configured grid.
    Analytic(Common),
    /// All methods side by side with pairwise L1 distances.
    Compare(Common),
    /// Simulated densities for several trader counts.
    SweepN {
        #[command(flatten)]
        common: Common,
        /// Comma-separated trader counts.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_LIST)]
        n_list: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// key=value file or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override one key, e.g. --set u2=1; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn to_cli_config(cmd: Command) -> CliConfig {
    let (subcommand, common, n_list) = match cmd {
        Command::Simulate(c) => (Subcommand::Simulate, c, Vec::new()),
        Command::Lattice(c) => (Subcommand::Lattice, c, Vec::new()),
        Command::MlSolve(c) => (Subcommand::MlSolve, c, Vec::new()),
        Command::Analytic(c) => (Subcommand::Analytic, c, Vec::new()),
        Command::Compare(c) => (Subcommand::Compare, c, Vec::new()),
        Command::SweepN { common, n_list } => (Subcommand::SweepN, common, n_list),
    };
    CliConfig {
        subcommand,
        config_path: common.config,
        output_dir: common.out,
        overrides: common.set,
        n_list,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = to_cli_config(cli.command);
    let result = configure_threads().and_then(|()| execute(&cfg));
    match result {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dealer {}: {e}", cfg.subcommand.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
