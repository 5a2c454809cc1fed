use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "varint",
    about = "Parallel relaxation solver for discrete variational trajectory problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem described by a JSON config and write
    /// trajectory.csv, residuals.csv and report.json.
    Run {
        /// Path to the JSON run configuration.
        config: PathBuf,
    },
    /// Run convergence diagnostics on a stored trajectory.csv (no solving)
    /// and write convergence_report.json.
    Diag {
        /// Path to the JSON run configuration (names the problem and the
        /// output directory holding trajectory.csv).
        config: PathBuf,
    },
    /// Print the structure matrices of one derivative order as JSON.
    Matrices {
        /// Derivative order (>= 1).
        #[arg(long)]
        gamma: usize,
        /// Step size (nonzero).
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => varint_cli::run::cmd_run(&config),
        Command::Diag { config } => varint_cli::run::cmd_diag(&config),
        Command::Matrices { gamma, h } => varint_cli::run::cmd_matrices(gamma, h),
    };
    std::process::exit(code);
}
