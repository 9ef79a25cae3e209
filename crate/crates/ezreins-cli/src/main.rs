//! `ezreins` command-line tool: validation, solving, sweeps, the investment
//! comparison table, verification suites and path simulation, all as CSV.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ezreins::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "ezreins", version, about = "Robust reinsurance, investment and consumption under Epstein-Zin preferences")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Solver: exact, unit_eis or cs.
    #[arg(long, global = true, default_value = "exact")]
    pub mode: String,
    /// Parameter override `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Random seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; defaults to standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check parameters; exits nonzero on hard failures.
    Validate,
    /// Strategy, value and g on a factor grid at one time.
    Solve {
        /// Time; defaults to the horizon start.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        #[arg(long, default_value_t = -1.0)]
        m_min: f64,
        #[arg(long, default_value_t = 1.0)]
        m_max: f64,
        #[arg(long, default_value_t = 21)]
        m_steps: usize,
    },
    /// Strategy as one parameter varies.
    Sweep {
        /// Parameter key to vary.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        /// Factor level; defaults to m0.
        #[arg(long)]
        m: Option<f64>,
    },
    /// Exact versus approximate investment ratios across volatilities.
    Table2 {
        /// Factor level.
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        /// Volatilities; defaults to the published rows.
        #[arg(long, value_delimiter = ',')]
        sigmas: Vec<f64>,
    },
    /// Verification suites as CSV rows; exits zero even when checks fail.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Sample points for the fd, mc and saddle suites.
        #[arg(long)]
        points: Option<usize>,
        /// Monte Carlo paths.
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Monte Carlo time step.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Simulated paths or statistics as CSV.
    Simulate {
        #[arg(long, value_enum, default_value_t = Target::Wealth)]
        what: Target,
        #[arg(long, value_enum, default_value_t = MeasureArg::P)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Initial wealth or surplus.
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        /// Store every n-th step.
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        /// Negative-moment exponent for `--what condition-m`; defaults to 2 gamma - 1.
        #[arg(long)]
        ell: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Pde,
    Saddle,
    Fd,
    Mc,
    Bounds,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Wealth,
    Factor,
    Surplus,
    ConditionM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    P,
    Qxi,
    Fk,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
