//! `downtime`: fit recovery-time models from transition logs, pick reboot
//! thresholds, and simulate or A/B-test policies.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use table::Format;

#[derive(Debug, Parser)]
#[command(name = "downtime", version, about = "Reboot-threshold modelling from node transition logs")]
pub struct Cli {
    /// Output format for result tables.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a recovery-time distribution to censored durations from a log.
    #[command(allow_negative_numbers = true)]
    Fit(FitArgs),
    /// Optimal waiting threshold for given parameters or a log.
    #[command(allow_negative_numbers = true)]
    Optimize(OptimizeArgs),
    /// Intervention cost and transition matrices estimated from a log.
    Cost(CostArgs),
    /// Feature regression of distribution parameters and per-cluster thresholds.
    #[command(allow_negative_numbers = true)]
    Regress(RegressArgs),
    /// Jointly optimal thresholds for the coupled scenario.
    #[command(allow_negative_numbers = true)]
    Joint(JointArgs),
    /// Generate a synthetic transition log.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Randomized comparison of two policies.
    #[command(allow_negative_numbers = true)]
    Abtest(AbtestArgs),
    /// Expected downtime (and optionally intervention cost) over a threshold grid.
    #[command(allow_negative_numbers = true)]
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
pub struct LogArgs {
    /// Transition-log CSV.
    #[arg(long)]
    pub log: PathBuf,
    /// State whose waiting time is modelled.
    #[arg(long, default_value = "Unhealthy")]
    pub from: String,
    /// Recovery target; transitions elsewhere count as censored.
    #[arg(long, default_value = "Ready")]
    pub to: String,
    /// Feature column holding the cluster id; fits are repeated per cluster.
    #[arg(long)]
    pub cluster_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub family: downtime_core::Family,
    #[command(flatten)]
    pub log: LogArgs,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Shape (rate for the exponential family).
    #[arg(long)]
    pub shape: Option<f64>,
    /// Scale (inverse scale for Lomax).
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub family: downtime_core::Family,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Fit the parameters from this log instead of passing them.
    #[arg(long, conflicts_with_all = ["shape", "scale"])]
    pub log: Option<PathBuf>,
    #[arg(long, default_value = "Unhealthy", requires = "log")]
    pub from: String,
    #[arg(long, default_value = "Ready", requires = "log")]
    pub to: String,
    /// State entered on intervention; names the model-file transition.
    #[arg(long, default_value = "PoweringOn")]
    pub intervention: String,
    #[arg(long, requires = "log")]
    pub cluster_column: Option<String>,
    /// Mean cost of an intervention, in the units of the durations.
    #[arg(long)]
    pub c_int: f64,
    /// Threshold currently in use, for the savings estimate.
    #[arg(long, default_value_t = downtime_core::io::DEFAULT_BASELINE_TAU)]
    pub baseline_tau: f64,
    /// Also write a model file.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// `fitted_at` for the model file; defaults to the latest log timestamp.
    #[arg(long)]
    pub fitted_at: Option<i64>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// State whose expected time to absorption is the intervention cost.
    #[arg(long, default_value = "PoweringOn")]
    pub target: String,
    #[arg(long, default_value = "Ready")]
    pub absorbing: String,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    #[arg(long)]
    pub family: downtime_core::Family,
    #[command(flatten)]
    pub log: LogArgs,
    #[arg(long)]
    pub c_int: f64,
    /// Upper bound of the first parameter's link (default: ten times the global fit).
    #[arg(long, requires = "upper_scale")]
    pub upper_shape: Option<f64>,
    #[arg(long, requires = "upper_shape")]
    pub upper_scale: Option<f64>,
    #[arg(long, default_value_t = downtime_core::io::DEFAULT_BASELINE_TAU)]
    pub baseline_tau: f64,
    #[arg(long, default_value = "PoweringOn")]
    pub intervention: String,
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long)]
    pub fitted_at: Option<i64>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Scenario config (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Print the parsed config in canonical form and exit.
    #[arg(long)]
    pub dump_config: bool,
}

#[derive(Debug, Args)]
pub struct JointArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Single starting point instead of the multistart lattice.
    #[arg(long, requires = "init_tau2")]
    pub init_tau1: Option<f64>,
    #[arg(long, requires = "init_tau1")]
    pub init_tau2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of episodes.
    #[arg(long, required_unless_present = "dump_config")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "dump_config")]
    pub seed: Option<u64>,
    /// Unhealthy threshold (default: baseline_tau).
    #[arg(long)]
    pub tau1: Option<f64>,
    /// PoweringOn threshold (default: baseline_tau).
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Write the log here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AbtestArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, required_unless_present = "dump_config")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "dump_config")]
    pub seed: Option<u64>,
    /// Probability of assigning an episode to the treatment policy.
    #[arg(long, default_value_t = 0.5)]
    pub prob: f64,
    /// Treatment thresholds (default: the joint optimum).
    #[arg(long, requires = "treatment_tau2")]
    pub treatment_tau1: Option<f64>,
    #[arg(long, requires = "treatment_tau1")]
    pub treatment_tau2: Option<f64>,
    /// Control thresholds (default: baseline_tau for both).
    #[arg(long)]
    pub control_tau1: Option<f64>,
    #[arg(long)]
    pub control_tau2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Distribution family; not needed with `--config`.
    #[arg(long, required_unless_present = "config")]
    pub family: Option<downtime_core::Family>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Take the Unhealthy distribution from a scenario config and add the
    /// intervention-cost column.
    #[arg(long, conflicts_with_all = ["family", "shape", "scale"])]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub c_int: f64,
    /// Largest threshold on the grid (default: ten time scales).
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Number of grid points, starting at zero.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
