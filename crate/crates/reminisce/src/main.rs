use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reminisce::cli::{
    cmd_compare_rewards, cmd_evaluate, cmd_train, cmd_trace, cmd_validate_model, resolve_config,
    CliError, Overrides,
};
use reminisce::domain::RewardVariant;

#[derive(Parser)]
#[command(
    name = "reminisce",
    version,
    about = "Train and evaluate robot conversation strategies against a simulated patient"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RewardArg {
    R1,
    R2,
}

impl From<RewardArg> for RewardVariant {
    fn from(arg: RewardArg) -> Self {
        match arg {
            RewardArg::R1 => RewardVariant::R1,
            RewardArg::R2 => RewardVariant::R2,
        }
    }
}

#[derive(Args)]
struct CommonOpts {
    /// Experiment config file (JSON)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; repeat for multi-seed runs (overrides the config)
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reward preset (overrides the config)
    #[arg(long, value_enum)]
    reward: Option<RewardArg>,
    /// Patient model: "default" or a path to a model JSON (overrides the config)
    #[arg(long)]
    model: Option<String>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<reminisce::config::ExperimentConfig, CliError> {
        let overrides = Overrides {
            seeds: self.seeds.clone(),
            out: self.out.clone(),
            reward: self.reward.map(RewardVariant::from),
            model: self.model.clone(),
        };
        resolve_config(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a Q-table per seed and write the run artifacts
    Train(CommonOpts),
    /// Build evaluation reports from existing training artifacts
    Evaluate(CommonOpts),
    /// Check a model file against the structural and behavioral constraints
    ValidateModel {
        /// Model JSON document
        path: PathBuf,
    },
    /// Train under R1 and R2 with shared seeds and emit side-by-side policies
    CompareRewards(CommonOpts),
    /// Roll out a saved policy and write an interaction trace
    Trace {
        #[command(flatten)]
        common: CommonOpts,
        /// Policy JSON (a final_policy.json or a bare state->action map)
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Q-table JSON; its greedy policy is used when no --policy is given
        #[arg(long)]
        qtable: Option<PathBuf>,
        /// Number of episodes to roll out
        #[arg(long, default_value_t = 20)]
        episodes: usize,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Train(common) => {
            cmd_train(&common.resolve()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate(common) => {
            cmd_evaluate(&common.resolve()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateModel { path } => {
            let report = cmd_validate_model(&path)?;
            for finding in report.violations() {
                println!("{finding}");
            }
            println!(
                "{}: {} checks, {} violations",
                path.display(),
                report.findings().len(),
                report.violation_count()
            );
            if report.is_valid() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::CompareRewards(common) => {
            cmd_compare_rewards(&common.resolve()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace {
            common,
            policy,
            qtable,
            episodes,
        } => {
            cmd_trace(
                &common.resolve()?,
                policy.as_deref(),
                qtable.as_deref(),
                episodes,
            )?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
