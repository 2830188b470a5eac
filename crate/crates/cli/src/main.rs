//! `ks21`: validate the KS21 set, compute its bounds, simulate the photonic
//! certification experiment and certify count data.
//!
//! Exit codes: 0 success or confirmed, 1 failed check or classical-compatible
//! data, 2 inconclusive, 3 usage or I/O error.

mod artifacts;
mod commands;
mod failure;
mod inputs;
mod plan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::SimSource;
use crate::failure::{Outcome, EXIT_USAGE};
use crate::plan::Preset;

#[derive(Parser)]
#[command(
    name = "ks21",
    version,
    about = "Kochen-Specker set certification and simulation"
)]
struct Cli {
    /// Worker threads for simulations (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check contexts, coverage and KS-uncolorability of a set.
    Validate {
        #[arg(long)]
        set: Option<PathBuf>,
        /// Also write the exclusivity graph as an edge list.
        #[arg(long)]
        edge_list: Option<PathBuf>,
    },
    /// Classical and quantum bounds, ideal and corrected for ε̄.
    Bounds {
        #[arg(long)]
        set: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        epsilon_bar: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a simulated experiment and write its CSVs and manifest.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Apply the certification verdict to measured or simulated counts.
    Certify {
        #[command(flatten)]
        sim: SimArgs,
        /// Count table in the `counts.csv` schema.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Use this ε̄ instead of running exclusivity tests.
        #[arg(long, allow_negative_numbers = true)]
        epsilon_bar: Option<f64>,
    },
}

#[derive(Args)]
struct SimArgs {
    /// Experiment config (JSON).
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pulses: Option<u64>,
    #[arg(long)]
    set: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl SimArgs {
    fn source(&self) -> SimSource {
        SimSource {
            config: self.config.clone(),
            preset: self.preset,
            seed: self.seed,
            pulses: self.pulses,
        }
    }
}

fn run(cli: Cli) -> Outcome<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| failure::Failure::usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Validate { set, edge_list } => {
            commands::validate(set.as_deref(), edge_list.as_deref())
        }
        Command::Bounds {
            set,
            epsilon_bar,
            out,
        } => commands::bounds(set.as_deref(), *epsilon_bar, out),
        Command::Simulate { sim } => {
            commands::simulate(sim.set.as_deref(), &sim.source(), &sim.out)
        }
        Command::Certify {
            sim,
            data,
            epsilon_bar,
        } => commands::certify(
            sim.set.as_deref(),
            data.as_deref(),
            &sim.source(),
            *epsilon_bar,
            &sim.out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code as u8)
        }
    }
}
