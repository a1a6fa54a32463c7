mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use twisted_core::{Error, Result};

use crate::config::{ExperimentConfig, Kind, Overrides};

/// Randomly twisted transfer operators: validation, assembly, spectra, moments and
/// free-group limits.
#[derive(Debug, Parser)]
#[command(name = "twisted", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the strict inclusion of the branch images and report contraction data.
    Validate,
    /// Write the Galerkin matrices and the overlap matrix H.
    Assemble,
    /// Singular values and eigenvalues of sampled twisted operators, Weyl-window summary.
    Simulate,
    /// Monte Carlo Hilbert–Schmidt norms and their centered moments.
    Moments,
    /// Tracial moments of the limit element and a Cayley-ball spectral sketch.
    Limit,
    /// Closed-form arcsine example on D(1, 3/2).
    Example6,
    /// Run the kind named by --kind or by the config file.
    Run,
}

#[derive(Debug, Args)]
struct Flags {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    kind: Option<Kind>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Permutation size; repeat for several sizes.
    #[arg(long = "n", global = true)]
    sizes: Vec<usize>,
    /// Truncation order.
    #[arg(long = "L", global = true)]
    order: Option<usize>,
    /// Worker threads (default: available parallelism). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<()> {
    let sub = match cli.command {
        Command::Validate => Some(Kind::Validate),
        Command::Assemble => Some(Kind::Assemble),
        Command::Simulate => Some(Kind::Simulate),
        Command::Moments => Some(Kind::Moments),
        Command::Limit => Some(Kind::Limit),
        Command::Example6 => Some(Kind::Example6),
        Command::Run => None,
    };
    let kind = match (sub, cli.flags.kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("subcommand {a} conflicts with --kind {b}")));
        }
        (a, b) => a.or(b),
    };
    if let Some(threads) = cli.flags.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let overrides = Overrides {
        kind,
        seed: cli.flags.seed,
        trials: cli.flags.trials,
        sizes: cli.flags.sizes,
        order: cli.flags.order,
        out: cli.flags.out,
    };
    let cfg = ExperimentConfig::load(cli.flags.config.as_deref(), overrides)?;
    commands::run(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}
