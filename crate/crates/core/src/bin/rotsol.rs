use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rotsol::config::{ConfigEntries, Mode};
use rotsol::run::{exit_code_for, run, RunStatus};

/// Exact rotational solutions of the compressible Euler equations.
#[derive(Parser)]
#[command(name = "rotsol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Emden system and write a JSON-lines trajectory.
    Integrate(Common),
    /// Sample density, velocity and pressure on a grid (CSV).
    Sample(Common),
    /// Finite-difference residual report (JSON).
    Verify(Common),
    /// Lifespan classification (3D) or period detection (2D) as JSON.
    Classify(Common),
    /// Classify and integrate over a Cartesian parameter grid (CSV).
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set lambda=-1`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Spatial dimension (2 or 3).
    #[arg(long, value_parser = ["2", "3"])]
    dim: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Integrate(c) => (Mode::Integrate, c),
        Command::Sample(c) => (Mode::Sample, c),
        Command::Verify(c) => (Mode::Verify, c),
        Command::Classify(c) => (Mode::Classify, c),
        Command::Sweep(c) => (Mode::Sweep, c),
    };
    let config = (|| {
        let mut entries = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    rotsol::Error::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                ConfigEntries::parse(&text)?
            }
            None => ConfigEntries::default(),
        };
        for o in &common.overrides {
            entries.set(o)?;
        }
        if let Some(d) = &common.dim {
            entries.set_value("dim", d)?;
        }
        if let Some(o) = &common.output {
            entries.set_value("output", &o.display().to_string())?;
        }
        entries.set_value("mode", mode.as_str())?;
        entries.build()
    })();
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("rotsol: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    match run(&config) {
        Ok(RunStatus::Complete) => ExitCode::SUCCESS,
        Ok(status @ RunStatus::BlowupTruncated(end)) => {
            eprintln!(
                "rotsol: blowup before the last requested time: {}",
                serde_json::to_string(&end).unwrap_or_default()
            );
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("rotsol: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
