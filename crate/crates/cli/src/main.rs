use clap::{Args, Parser, Subcommand};
use coexist_cli::commands::{self, EXIT_CONFIG};
use coexist_cli::config::RunConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Coexistence states of diffusive competition systems: principal
/// eigenvalues, existence/nonexistence/uniqueness criteria, monotone
/// iteration solves, and parameter sweeps.
#[derive(Parser)]
#[command(name = "coexist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the solver's outer tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Redirect output files into this directory (file names kept).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Principal Dirichlet eigenvalue and eigenfunction of -Delta + q.
    Eigen(CommonArgs),
    /// Evaluate the existence/nonexistence/uniqueness criteria.
    Check(CommonArgs),
    /// Solve for a coexistence state by monotone iteration.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Run the decay check instead of refusing when existence fails.
        #[arg(long)]
        force: bool,
    },
    /// Sweep one scalar constant across a range and tabulate the criteria.
    Sweep(CommonArgs),
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, i32> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        eprintln!("error: reading {}: {e}", args.config.display());
        EXIT_CONFIG
    })?;
    let mut config = RunConfig::parse(&text).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })?;
    if let Some(tol) = args.tol {
        if !(tol.is_finite() && tol > 0.0) {
            eprintln!("error: --tol must be positive");
            return Err(EXIT_CONFIG);
        }
        config.solver.tol_outer = tol;
    }
    if let Some(dir) = &args.out {
        config.outputs.fields_path = rebase(dir, &config.outputs.fields_path);
        config.outputs.report_path = rebase(dir, &config.outputs.report_path);
    }
    Ok(config)
}

fn rebase(dir: &Path, path: &Path) -> PathBuf {
    match path.file_name() {
        Some(name) => dir.join(name),
        None => dir.to_path_buf(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Eigen(args) => match load_config(args) {
            Ok(config) => commands::cmd_eigen(&config),
            Err(code) => code,
        },
        Command::Check(args) => match load_config(args) {
            Ok(config) => commands::cmd_check(&config),
            Err(code) => code,
        },
        Command::Solve { common, force } => match load_config(common) {
            Ok(config) => commands::cmd_solve(&config, *force),
            Err(code) => code,
        },
        Command::Sweep(args) => match load_config(args) {
            Ok(config) => commands::cmd_sweep(&config),
            Err(code) => code,
        },
    };
    ExitCode::from(code as u8)
}
