//! `casimir`: spectra, figure data, parameter scans and oracle comparisons.

mod commands;
mod error;
mod output;
mod settings;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::FigureId;
use error::CliResult;
use settings::{Axis, Params, RunConfig};

#[derive(Parser)]
#[command(name = "casimir", version, about = "Photon creation and decoherence in a leaky cavity with an oscillating mirror")]
struct Cli {
    #[command(flatten)]
    params: Params,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and first-order eigenfrequencies of both mode families.
    Spectrum,
    /// Data behind one of the standard figures.
    Figure {
        #[arg(value_enum)]
        id: FigureId,
    },
    /// Photon number of mode k along one parameter axis.
    Scan {
        #[arg(long, value_enum)]
        axis: Axis,
    },
    /// Double-time-integral photon number and entropy for one trajectory.
    General,
    /// Truncated Fock-space run compared with the closed forms.
    OracleCompare,
}

fn run(cli: Cli) -> CliResult<()> {
    let rc = RunConfig::resolve(cli.params)?;
    let cfg = rc.system_for(rc.p)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    match cli.command {
        Command::Spectrum => commands::spectrum(&rc),
        Command::Figure { id } => commands::figure(&rc, id),
        Command::Scan { axis } => commands::scan(&rc, axis),
        Command::General => commands::general(&rc),
        Command::OracleCompare => commands::oracle_compare(&rc),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("casimir: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
