use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fif_cli::commands::{cmd_bounds, cmd_boxdim, cmd_report, cmd_sample, cmd_validate};
use fif_cli::Flags;

/// Fractal interpolation functions: validation, sampling and box dimension.
#[derive(Debug, Parser)]
#[command(name = "fif", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Join-up residual, well-definedness and interpolation check.
    Validate { config: PathBuf },
    /// CSV of f* on the vertex set of the given depth.
    Sample {
        config: PathBuf,
        /// 0 gives the interpolation nodes.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Theoretical dimension bounds as JSON.
    Bounds { config: PathBuf },
    /// Box-counting slope as JSON.
    Boxdim {
        config: PathBuf,
        #[arg(long)]
        kmin: Option<usize>,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Full report with CSV and SVG artifacts.
    Report {
        config: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        kmin: Option<usize>,
        #[arg(long)]
        kmax: Option<usize>,
        /// Output directory; defaults to out/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Sample { config, depth } => cmd_sample(&config, &Flags { depth, ..Default::default() }),
        Command::Bounds { config } => cmd_bounds(&config),
        Command::Boxdim { config, kmin, kmax } => cmd_boxdim(&config, &Flags { kmin, kmax, ..Default::default() }),
        Command::Report { config, depth, kmin, kmax, out } => cmd_report(&config, &Flags { depth, kmin, kmax, out }),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fif: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
