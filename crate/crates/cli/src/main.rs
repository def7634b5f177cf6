//! `entropic`: run c-function scans, fits and validation from the command line.

mod config;
mod fitcmd;
mod output;
mod run;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or input files; exit status 2.
    #[error("config error: {0}")]
    Config(String),
    /// Checks that ran and failed, or points that could not be measured; exit status 1.
    #[error("{0}")]
    Failed(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] entropic::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "entropic", version, about = "Entropic c-functions of the Ising model by non-equilibrium Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the trajectories of one point.
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn load(&self, extra: &[String]) -> Result<RunConfig, CliError> {
        let mut overrides = self.set.clone();
        overrides.extend_from_slice(extra);
        if let Some(out) = &self.out {
            overrides.push(format!("out={}", out.display()));
        }
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(w) = self.workers {
            overrides.push(format!("workers={w}"));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Measure C(x) over a range of cut lengths.
    Cfun(RunArgs),
    /// Measure C at a fixed cut length for a list of couplings.
    BetaScan {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated couplings; overrides `betas`.
        #[arg(long)]
        betas: Option<String>,
        /// Cut step to measure; overrides `scan_l`.
        #[arg(long)]
        l: Option<usize>,
    },
    /// Fit model curves to points.csv or entropy.csv files.
    Fit(fitcmd::FitArgs),
    /// Run the oracle, estimator and special-function checks.
    Validate(validate::ValidateArgs),
    /// Write exact reference values for a small lattice.
    Golden(validate::GoldenArgs),
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cfun(args) => {
            let cfg = args.load(&[])?;
            pool(cfg.workers)?.install(|| run::cmd_cfun(&cfg))
        }
        Command::BetaScan { run: args, betas, l } => {
            let mut extra = Vec::new();
            if let Some(b) = betas {
                extra.push(format!("betas={b}"));
            }
            if let Some(l) = l {
                extra.push(format!("scan_l={l}"));
            }
            let cfg = args.load(&extra)?;
            pool(cfg.workers)?.install(|| run::cmd_beta_scan(&cfg))
        }
        Command::Fit(args) => fitcmd::cmd_fit(&args),
        Command::Validate(args) => {
            let workers = args.workers;
            pool(workers)?.install(|| validate::cmd_validate(&args))
        }
        Command::Golden(args) => validate::cmd_golden(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entropic: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
