use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use relcost::experiment::{run, Command, ExperimentConfig};
use relcost::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Compare,
    S2,
    Probe,
    Optimize,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Compare => Command::Compare,
            Cmd::S2 => Command::S2,
            Cmd::Probe => Command::Probe,
            Cmd::Optimize => Command::Optimize,
        }
    }
}

/// Simulate and analyse reliable message delivery over a lossy link.
#[derive(Debug, Parser)]
#[command(name = "relcost", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replaces the config's seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Invalid(violations)) => {
            eprintln!("invalid config {}:", args.config.display());
            for v in violations {
                eprintln!("  {v}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(args: &Args) -> Result<(), Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed_override {
        config.seed = seed;
    }
    let outputs = run(args.command.into(), &config, args.jobs)?;
    outputs.write_to(&args.out)?;
    if let Some(table) = outputs.get("table.txt") {
        print!("{table}");
    }
    Ok(())
}
