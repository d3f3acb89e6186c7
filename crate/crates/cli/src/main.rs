//! `sopchart`: spatial ordinal pattern control charts from the command line.

mod commands;
mod config;
mod error;
mod frames;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliResult;

#[derive(Parser)]
#[command(name = "sopchart", version, about = "Monitor spatial dependence in streams of lattice data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a chart over a recorded frame stream and print one row per inspection.
    Monitor(Overrides),
    /// Find the limit that gives a target in-control ARL.
    Calibrate(Overrides),
    /// Estimate the ARL of a chart with a fixed limit.
    Arl(Overrides),
    /// Write simulated frames as a `t,s1,s2,y` stream.
    Simulate(Overrides),
}

fn run(cli: Cli) -> CliResult<()> {
    let (o, cmd) = match &cli.command {
        Command::Monitor(o) => (o, "monitor"),
        Command::Calibrate(o) => (o, "calibrate"),
        Command::Arl(o) => (o, "arl"),
        Command::Simulate(o) => (o, "simulate"),
    };
    let cfg = RunConfig::resolve(o)?;
    let mut out = commands::open_output(o.output.as_deref())?;
    match cmd {
        "monitor" => commands::monitor(&cfg, &mut out)?,
        "calibrate" => commands::calibrate(&cfg, &mut out)?,
        "arl" => commands::arl(&cfg, &mut out)?,
        _ => commands::simulate(&cfg, &mut out, commands::output_is_ndjson(o.output.as_deref()))?,
    }
    out.flush()?;
    Ok(())
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
            eprintln!("sopchart: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
