//! Batch front end for the pseudospectral toolkit.
//!
//! Each subcommand reads one TOML config, runs one experiment, and writes
//! plot-ready tables into the output directory together with a `meta.json`
//! sidecar (the only file carrying wall-clock data).  Exit codes: 0 on
//! success, 2 on configuration or I/O problems, 3 when the numerics
//! themselves fail (blow-up guard, non-convergent quadrature, empty
//! resonant support).

mod config;
mod runs;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "kpi3",
    version,
    about = "Pseudospectral experiments for fractional KP-I on anisotropic tori"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the truncated flow and record conservation diagnostics.
    Simulate(RunArgs),
    /// Sample frequency pairs and classify their resonance strength.
    Resonance(RunArgs),
    /// Check the flow's scaling symmetry and tabulate norm exponents.
    Scaling(RunArgs),
    /// Measure norm-inflation ratios over an (alpha, N) sweep.
    Illposed(RunArgs),
    /// Run one inequality bench and fit dyadic growth exponents.
    Bench(RunArgs),
    /// Evaluate norms of a stored state snapshot.
    Norms(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override the seed given in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap the worker thread pool (default: one per core).
    #[arg(long, env = "KPI3_THREADS")]
    threads: Option<usize>,
    /// Print progress to standard error (repeat for more detail).
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err:#}");
        let code = match err.downcast_ref::<kpi3_core::error::Error>() {
            Some(e) if e.is_numerical() => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}

fn run(cli: &Cli) -> Result<()> {
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Resonance(a) => ("resonance", a),
        Command::Scaling(a) => ("scaling", a),
        Command::Illposed(a) => ("illposed", a),
        Command::Bench(a) => ("bench", a),
        Command::Norms(a) => ("norms", a),
    };
    if let Some(n) = args.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let file = config::FileConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(file.seed);
    let run = runs::Run {
        file: &file,
        config_path: &args.config,
        out: &args.out,
        seed,
        verbosity: args.verbose,
    };
    if args.verbose > 0 {
        eprintln!(
            "{name}: config {}, seed {seed}, output {}",
            args.config.display(),
            args.out.display()
        );
    }
    match &cli.command {
        Command::Simulate(_) => run.simulate()?,
        Command::Resonance(_) => run.resonance()?,
        Command::Scaling(_) => run.scaling()?,
        Command::Illposed(_) => run.illposed()?,
        Command::Bench(_) => run.bench()?,
        Command::Norms(_) => run.norms()?,
    }
    run.write_meta(name)
}
