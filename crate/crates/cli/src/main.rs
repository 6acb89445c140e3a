//! `mtt`: simulate scenes, track targets at fixed parameters, learn the
//! parameters jointly with the tracks, and score samples against the truth.

mod chains;
mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::Result;
use crate::files::{read_text, Outputs};

#[derive(Parser)]
#[command(name = "mtt", version, about = "Multi-target tracking by MCMC over data associations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Scene CSV written by `simulate` or prepared by hand.
    #[arg(long)]
    scene: PathBuf,
    /// Recorded sweeps per chain, overriding `run.sweeps`.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Overrides `run.burn_in`.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Independent chains, overriding `run.chains`.
    #[arg(long)]
    chains: Option<usize>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a scene from the model; writes scene.csv and truth.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of scans, overriding `run.n_scans`.
        #[arg(long)]
        scans: Option<usize>,
    },
    /// Sample associations and states at the model parameters, starting with
    /// every observation as clutter.
    Track(RunArgs),
    /// Sample associations, states and parameters jointly.
    Learn(RunArgs),
    /// Per-scan OSPA of association samples against the truth.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        truth: PathBuf,
        /// One or more samples files written by `track` or `learn`.
        #[arg(long, num_args = 1.., required = true)]
        samples: Vec<PathBuf>,
    },
    /// Print the resolved configuration.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::parse(&read_text(p)?),
        None => Ok(Config::default()),
    }
}

fn resolve(common: &Common, tweak: impl FnOnce(&mut Config)) -> Result<Config> {
    let mut cfg = load(common.config.as_ref())?;
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    tweak(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn with_outputs(dir: &std::path::Path, f: impl FnOnce(&mut Outputs) -> Result<()>) -> Result<()> {
    let mut out = Outputs::new(dir)?;
    match f(&mut out) {
        Ok(()) => Ok(()),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, scans } => {
            let cfg = resolve(&common, |c| {
                if let Some(n) = scans {
                    c.run.n_scans = n;
                }
            })?;
            with_outputs(&common.out_dir, |out| commands::simulate(&cfg, out))
        }
        Command::Track(args) => run_sampler(args, false),
        Command::Learn(args) => run_sampler(args, true),
        Command::Evaluate { common, truth, samples } => {
            let cfg = resolve(&common, |_| {})?;
            with_outputs(&common.out_dir, |out| commands::evaluate(&cfg, &truth, &samples, out))
        }
        Command::Config { config } => {
            let cfg = load(config.as_ref())?;
            cfg.validate()?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn run_sampler(args: RunArgs, learn: bool) -> Result<()> {
    let cfg = resolve(&args.common, |c| {
        if let Some(v) = args.sweeps {
            c.run.sweeps = v;
        }
        if let Some(v) = args.burn_in {
            c.run.burn_in = v;
        }
        if let Some(v) = args.chains {
            c.run.chains = v;
        }
    })?;
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    with_outputs(&args.common.out_dir, |out| commands::track(&cfg, &args.scene, learn, workers, out))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
