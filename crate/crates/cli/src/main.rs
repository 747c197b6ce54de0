//! `porestokes`: geometry → mesh → FEM / DD-PNM / C-PNM / calibration.
//!
//! Exit codes: 0 success, 2 bad input, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{InputError, RunArgs};

#[derive(Debug, Parser)]
#[command(name = "porestokes", version, about = "Pore-scale Stokes flow solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monolithic Taylor-Hood solve; writes fields.vtk and norms.csv.
    SolveFem(RunArgs),
    /// Domain-decomposition pore-network solve.
    SolveDdpnm(DdpnmArgs),
    /// Classical pore network with geometric throat conductances.
    SolveCpnm(RunArgs),
    /// Calibrated network from DtN maps, compared against DD-PNM tractions.
    Calibrate(CalibrateArgs),
    /// Writes the planar straight-line graph of a geometry as pslg.json.
    Pslg(PslgArgs),
}

#[derive(Debug, Args)]
struct DdpnmArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also solve the monolithic problem and report the error against it.
    #[arg(long)]
    reference: bool,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Use the DtN maps in a previous `solve-ddpnm` report.json instead of
    /// solving again.
    #[arg(long)]
    from_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PslgArgs {
    #[arg(long)]
    geometry: PathBuf,
    /// Target edge length on boundaries and interfaces.
    #[arg(long)]
    h: f64,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<porestokes::Error>() {
            return if e.is_input_error() { 2 } else { 3 };
        }
    }
    3
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::SolveFem(a) => commands::solve_fem(&a.resolve()?),
        Command::SolveDdpnm(a) => commands::solve_ddpnm(&a.run.resolve()?, a.reference),
        Command::SolveCpnm(a) => commands::solve_cpnm(&a.resolve()?),
        Command::Calibrate(a) => commands::calibrate(&a.run.resolve()?, a.from_report.as_deref()),
        Command::Pslg(a) => commands::pslg(&a.geometry, a.h, &a.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PORESTOKES_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
