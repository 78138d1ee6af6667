//! Command-line driver: config parsing, run orchestration and the on-disk
//! layout of run directories.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Mode};
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "shocklab", version, about = "Short-pulse shock formation runs and sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override a config value, e.g. `--set model.delta=0.025` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub sets: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build initial data and radiation bounds.
    Datagen,
    /// Evolve, trace the fan and detect the shock.
    Evolve,
    /// Burgers fan oracle.
    Burgers,
    /// Run one evolution per value of a swept parameter.
    Sweep(SweepArgs),
    /// Sweep over `r0`.
    #[command(name = "sweep-r0")]
    SweepR0(SweepValues),
    /// Sweep over `delta`.
    #[command(name = "sweep-delta")]
    SweepDelta(SweepValues),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `r0` or `delta`; overrides `sweep.parameter`.
    #[arg(long)]
    pub param: Option<String>,
    #[command(flatten)]
    pub values: SweepValues,
}

#[derive(Debug, Args)]
pub struct SweepValues {
    /// Comma-separated values; overrides `sweep.values`.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
}

impl Cli {
    /// Resolved mode and config, with subcommand flags applied after `--set`.
    pub fn resolve(&self) -> Result<(Mode, RunConfig)> {
        let mut sets = self.common.sets.clone();
        let mut push_values = |v: &SweepValues| {
            if let Some(vals) = &v.values {
                let list: Vec<String> = vals.iter().map(|x| format!("{x:?}")).collect();
                sets.push(format!("sweep.values=[{}]", list.join(",")));
            }
        };
        let mode = match &self.command {
            Command::Datagen => Mode::Datagen,
            Command::Evolve => Mode::Evolve,
            Command::Burgers => Mode::Burgers,
            Command::Sweep(a) => {
                push_values(&a.values);
                if let Some(p) = &a.param {
                    sets.push(format!("sweep.parameter=\"{p}\""));
                }
                Mode::Sweep
            }
            Command::SweepR0(v) => {
                push_values(v);
                sets.push("sweep.parameter=\"r0\"".into());
                Mode::Sweep
            }
            Command::SweepDelta(v) => {
                push_values(v);
                sets.push("sweep.parameter=\"delta\"".into());
                Mode::Sweep
            }
        };
        let cfg = RunConfig::load(self.common.config.as_deref(), &sets)?;
        Ok((mode, cfg))
    }
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let run = || -> Result<()> {
        let (mode, cfg) = cli.resolve()?;
        if let Some(path) = &cfg.seed.csv {
            if cfg.seed.family == config::Family::Csv && !path.exists() {
                return Err(CliError::Config {
                    path: "seed.csv".into(),
                    msg: format!("{} does not exist", path.display()),
                });
            }
        }
        execute(mode, &cfg, &cli.common.out)
    };
    match run() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
