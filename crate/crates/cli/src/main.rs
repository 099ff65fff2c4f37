//! `pruneobs` command-line interface.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "pruneobs", version, about = "Resilient state estimation under sparse sensor attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a stealthy attack on a given or random support.
    Attack(AttackArgs),
    /// Decode a stacked measurement window with the l1 or weighted l1 observer.
    Estimate(EstimateArgs),
    /// Prune a support prior to a high-confidence safe set.
    Prune(PruneArgs),
    /// Restricted-isometry constant of U2^T at a given sparsity.
    Rip(RipArgs),
    /// Monte Carlo success rates over a grid of attack fractions.
    Sweep(SweepArgs),
    /// Trajectory scenario comparing LO, L1O and WL1P.
    Scenario(ScenarioArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Default)]
pub struct Common {
    /// JSON file with the subcommand's parameters; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout (only on success).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Where the plant comes from. JSON takes `{"A", "C", "x0"}`; the CSV pair
/// holds headerless matrices.
#[derive(Args, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemArgs {
    /// Plant JSON with A, C and optional x0.
    #[arg(long, value_name = "FILE")]
    pub system: Option<PathBuf>,
    /// Headerless CSV for A (with --c-csv).
    #[arg(long, value_name = "FILE", requires = "c_csv")]
    pub a_csv: Option<PathBuf>,
    /// Headerless CSV for C (with --a-csv).
    #[arg(long, value_name = "FILE", requires = "a_csv")]
    pub c_csv: Option<PathBuf>,
    /// Window length T.
    #[arg(long = "T", visible_alias = "horizon", value_name = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
}

impl SystemArgs {
    fn or(self, other: SystemArgs) -> SystemArgs {
        SystemArgs {
            system: self.system.or(other.system),
            a_csv: self.a_csv.or(other.a_csv),
            c_csv: self.c_csv.or(other.c_csv),
            horizon: self.horizon.or(other.horizon),
        }
    }
}

#[derive(Args, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,
    /// Attacked rows of y_T (0-based, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub support: Option<Vec<usize>>,
    /// Draw a random support of this fraction instead (uses --seed).
    #[arg(long)]
    pub attack_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stealth budget in l1 residual units.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Magnitude of z_e when the attacker's program is unbounded.
    #[arg(long)]
    pub cap: Option<f64>,
    /// True state; when given the attack is replayed against the decoder.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x_star: Option<Vec<f64>>,
    /// Bias threshold for the success verdict (defaults to the guarantee).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,
    /// Stacked window y_T, newest step first: a JSON array or {"y": [..]}.
    #[arg(long, value_name = "FILE")]
    pub y: Option<PathBuf>,
    /// Weight on untrusted rows.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Trusted rows (0-based); omitted means the plain l1 decoder.
    #[arg(long, value_delimiter = ',')]
    pub safe: Option<Vec<usize>>,
    /// Detector threshold; sets detector_flag.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x_star: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneRule {
    Product,
    Quantile,
}

#[derive(Args, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneArgs {
    /// Confidences p_i in (0,1].
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Estimated safe indicator (1 = safe).
    #[arg(long, value_delimiter = ',')]
    pub q_hat: Option<Vec<u8>>,
    /// True indicator; used to sample q_hat when absent and to report precision.
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<u8>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub strategy: Option<PruneRule>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Args, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RipArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,
    /// Sparsity level S.
    #[arg(long = "S", visible_alias = "s")]
    #[serde(rename = "S")]
    pub s: Option<usize>,
    /// Maximum number of supports; beyond it supports are sampled.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Sweep flags override the fields of the JSON sweep configuration.
#[derive(Args, Clone, Default)]
pub struct SweepArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "T", visible_alias = "horizon")]
    pub horizon: Option<usize>,
    /// Attack fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub true_rate: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// epsilon = factor * ||y*||_1.
    #[arg(long)]
    pub epsilon_factor: Option<f64>,
    /// Strategies: none, prior, pruned_product, pruned_quantile.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub spectral_radius: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignalKind {
    Sinusoid,
    StateOffset,
    None,
}

/// Scenario flags override the fields of the JSON scenario configuration.
#[derive(Args, Clone, Default)]
pub struct ScenarioArgs {
    /// System JSON; defaults to the bundled five-state surrogate.
    #[arg(long, value_name = "FILE")]
    pub system: Option<PathBuf>,
    #[arg(long = "T", visible_alias = "horizon")]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub attack_fraction: Option<f64>,
    /// Attacked sensors (0-based), overriding the random choice.
    #[arg(long, value_delimiter = ',')]
    pub attacked: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub signal: Option<SignalKind>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub true_rate: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<pruneobs::Error> for CliError {
    fn from(e: pruneobs::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}

fn run(cli: Cli) -> CliResult<()> {
    let (text, out) = match cli.command {
        Command::Attack(a) => {
            let out = a.common.out.clone();
            (commands::attack(a)?, out)
        }
        Command::Estimate(a) => {
            let out = a.common.out.clone();
            (commands::estimate(a)?, out)
        }
        Command::Prune(a) => {
            let out = a.common.out.clone();
            (commands::prune(a)?, out)
        }
        Command::Rip(a) => {
            let out = a.common.out.clone();
            (commands::rip(a)?, out)
        }
        Command::Sweep(a) => {
            let out = a.common.out.clone();
            (commands::sweep(a)?, out)
        }
        Command::Scenario(a) => {
            let out = a.common.out.clone();
            (commands::scenario(a)?, out)
        }
    };
    io::emit(&text, out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                _ => {
                    let rendered = e.to_string();
                    eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
