//! Implementations behind the `reminisce` subcommands.
//!
//! Commands only read their inputs and write into per-run directories;
//! rerunning a command with the same config and seeds regenerates every
//! artifact byte-identically.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::artifacts::{self, ArtifactError};
use crate::config::{ConfigError, ExperimentConfig, ModelSource};
use crate::domain::{PwdState, RewardSpec, RewardVariant, RobotAction};
use crate::evaluation::{
    build_report, rollout_policy, select_final_policy, EvalError, EvalParams, RolloutPlan,
};
use crate::patient::{ModelConstraintReport, ModelError, TransitionModel};
use crate::qlearning::{greedy_policy, train, PolicyTable, TrainConfigError};
use crate::rng;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Train(#[from] TrainConfigError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    /// 1 for validation failures, 2 for runtime errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Artifact(ArtifactError::Io { source, .. })
                if source.kind() != std::io::ErrorKind::NotFound =>
            {
                2
            }
            _ => 1,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub reward: Option<RewardVariant>,
    /// `default` or a path to a model document.
    pub model: Option<String>,
}

/// Load the config file (or start from defaults) and apply overrides.
pub fn resolve_config(
    config_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let mut config = match config_path {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if !overrides.seeds.is_empty() {
        config.seeds = overrides.seeds.clone();
    }
    if let Some(out) = &overrides.out {
        config.output_dir = out.clone();
    }
    if let Some(reward) = overrides.reward {
        config.reward_variant = reward;
    }
    if let Some(model) = &overrides.model {
        config.model = if model == "default" {
            match config.model {
                ModelSource::Default { seed } => ModelSource::Default { seed },
                ModelSource::File { .. } => ModelSource::Default { seed: 0 },
            }
        } else {
            ModelSource::File {
                path: PathBuf::from(model),
            }
        };
    }
    Ok(config)
}

/// Train one Q-table per seed and write `qtable.json`, `trainlog.csv`,
/// `snapshots.json` and `manifest.json` into each seed directory.
pub fn cmd_train(config: &ExperimentConfig) -> Result<(), CliError> {
    let model = config.validate()?;
    let spec = RewardSpec::preset(config.reward_variant);

    config
        .seeds
        .par_iter()
        .try_for_each(|&seed| -> Result<(), CliError> {
            let dir = config.seed_dir(seed);
            artifacts::create_dir(&dir)?;
            let train_config = config.train_config(seed);
            let (q, log) = train(&train_config, &model, &spec)?;

            artifacts::write_qtable(&dir.join(artifacts::QTABLE_FILE), &q)?;
            artifacts::write_trainlog(&dir.join(artifacts::TRAINLOG_FILE), &log)?;
            artifacts::write_snapshots(&dir.join(artifacts::SNAPSHOTS_FILE), &log)?;
            artifacts::write_manifest(
                &dir,
                seed,
                config,
                &[
                    artifacts::QTABLE_FILE,
                    artifacts::TRAINLOG_FILE,
                    artifacts::SNAPSHOTS_FILE,
                ],
            )?;

            let last = log.epochs.last().expect("at least one epoch");
            println!(
                "trained seed {seed} ({}): final epoch avg return {:.2}, q_update {:.4} -> {}",
                config.reward_variant,
                last.avg_return,
                last.q_update,
                dir.display()
            );
            Ok(())
        })
}

/// Build the evaluation report for every trained seed directory.
pub fn cmd_evaluate(config: &ExperimentConfig) -> Result<(), CliError> {
    let model = config.validate()?;
    let spec = RewardSpec::preset(config.reward_variant);
    let params = EvalParams::default();

    for &seed in &config.seeds {
        let dir = config.seed_dir(seed);
        let (_, log) = artifacts::load_train_log(&dir)?;
        let report = build_report(&log, &model, &spec, seed, &params)?;
        artifacts::write_eval_report(&dir, &report)?;

        let flagged = report
            .dp_checks
            .iter()
            .filter(|c| !c.within_tolerance)
            .count();
        println!(
            "evaluated seed {seed}: final policy {} (mean return {:.2} +- {:.2}), {} traces, dp checks {}",
            report.final_policy.policy_id(),
            report.final_policy_mean,
            report.final_policy_std_error,
            report.traces.len(),
            if flagged == 0 {
                "ok".to_string()
            } else {
                format!("{flagged} FLAGGED")
            }
        );
    }
    Ok(())
}

/// Load and validate a model document. Returns the full report; the caller
/// decides the exit status from it.
pub fn cmd_validate_model(path: &Path) -> Result<ModelConstraintReport, CliError> {
    let model = TransitionModel::load(path)?;
    Ok(model.validate())
}

#[derive(Serialize)]
struct CompareSeedSummary {
    seed: u64,
    r1_policy_id: u64,
    r2_policy_id: u64,
    r1_prompt_escalations: usize,
    r2_prompt_escalations: usize,
}

#[derive(Serialize)]
struct CompareSummary {
    seeds: Vec<CompareSeedSummary>,
    r1_prompt_escalations_total: usize,
    r2_prompt_escalations_total: usize,
}

fn prompt_escalations(policy: &PolicyTable) -> usize {
    PwdState::all()
        .filter(|s| {
            matches!(
                policy.action(*s),
                RobotAction::ModeratePrompt | RobotAction::DifficultPrompt
            )
        })
        .count()
}

/// Train under both reward presets with shared seeds and emit side-by-side
/// final policies per seed plus an aggregate summary.
pub fn cmd_compare_rewards(config: &ExperimentConfig) -> Result<(), CliError> {
    let model = config.validate()?;
    let params = EvalParams::default();
    let compare_dir = config.output_dir.join("compare");
    artifacts::create_dir(&compare_dir)?;

    let per_seed: Vec<CompareSeedSummary> = config
        .seeds
        .par_iter()
        .map(|&seed| -> Result<CompareSeedSummary, CliError> {
            let mut policies = Vec::new();
            for variant in [RewardVariant::R1, RewardVariant::R2] {
                let mut train_config = config.train_config(seed);
                train_config.reward_variant = variant;
                let spec = RewardSpec::preset(variant);
                let (_, log) = train(&train_config, &model, &spec)?;
                let selection = select_final_policy(&log, &model, &spec, seed, &params)?;
                policies.push(selection.policy);
            }
            let (r1, r2) = (policies[0], policies[1]);
            artifacts::write_policy_comparison(
                &compare_dir.join(format!("seed_{seed}.csv")),
                &r1,
                &r2,
            )?;
            Ok(CompareSeedSummary {
                seed,
                r1_policy_id: r1.policy_id(),
                r2_policy_id: r2.policy_id(),
                r1_prompt_escalations: prompt_escalations(&r1),
                r2_prompt_escalations: prompt_escalations(&r2),
            })
        })
        .collect::<Result<_, _>>()?;

    let summary = CompareSummary {
        r1_prompt_escalations_total: per_seed.iter().map(|s| s.r1_prompt_escalations).sum(),
        r2_prompt_escalations_total: per_seed.iter().map(|s| s.r2_prompt_escalations).sum(),
        seeds: per_seed,
    };
    let summary_path = compare_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).map_err(|source| {
        ArtifactError::Json {
            path: summary_path.clone(),
            source,
        }
    })?;
    text.push('\n');
    artifacts::write_text(&summary_path, &text)?;

    for s in &summary.seeds {
        println!(
            "seed {}: R1 policy {} ({} moderate/difficult prompts), R2 policy {} ({})",
            s.seed, s.r1_policy_id, s.r1_prompt_escalations, s.r2_policy_id, s.r2_prompt_escalations
        );
    }
    println!(
        "prompt escalations across seeds: R1 {}, R2 {} -> {}",
        summary.r1_prompt_escalations_total,
        summary.r2_prompt_escalations_total,
        compare_dir.display()
    );
    Ok(())
}

/// Roll out a saved policy and write a Table-style interaction trace.
pub fn cmd_trace(
    config: &ExperimentConfig,
    policy_path: Option<&Path>,
    qtable_path: Option<&Path>,
    episodes: usize,
) -> Result<(), CliError> {
    if episodes == 0 {
        return Err(CliError::Invalid("episodes must be positive".into()));
    }
    let model = config.validate()?;
    let spec = RewardSpec::preset(config.reward_variant);
    let seed = *config.seeds.first().expect("validated config has seeds");

    let policy = match (policy_path, qtable_path) {
        (Some(path), _) => artifacts::read_policy(path)?,
        (None, Some(path)) => greedy_policy(&artifacts::read_qtable(path)?),
        (None, None) => {
            let default = config.seed_dir(seed).join(artifacts::FINAL_POLICY_FILE);
            if !default.exists() {
                return Err(CliError::Invalid(format!(
                    "no policy given and {} does not exist; pass --policy or --qtable",
                    default.display()
                )));
            }
            artifacts::read_policy(&default)?
        }
    };

    let stats = rollout_policy(
        &policy,
        &model,
        &spec,
        config.train.session,
        RolloutPlan::new(seed, rng::purpose::EVAL_TRACE),
        episodes,
        episodes,
    );
    artifacts::create_dir(&config.output_dir)?;
    let path = config.output_dir.join(artifacts::TRACES_FILE);
    artifacts::write_traces(&path, &stats.traces)?;

    println!(
        "policy {}: {} episodes, mean return {:.2} +- {:.2} -> {}",
        policy.policy_id(),
        episodes,
        stats.mean_return,
        stats.std_error,
        path.display()
    );
    if let Some(first) = stats.traces.first() {
        println!("first episode:");
        println!("  step  state        action  choice");
        for row in &first.rows {
            let [r, e, c] = row.state;
            println!(
                "  {:>4}  {:<12} {:>6}  {}",
                row.step,
                format!("[{r}, {e}, {c}]"),
                row.action,
                row.choice.map(|ch| ch.label()).unwrap_or("")
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_config_fields() {
        let overrides = Overrides {
            seeds: vec![7, 8],
            out: Some(PathBuf::from("elsewhere")),
            reward: Some(RewardVariant::R2),
            model: Some("default".to_string()),
        };
        let config = resolve_config(None, &overrides).unwrap();
        assert_eq!(config.seeds, vec![7, 8]);
        assert_eq!(config.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(config.reward_variant, RewardVariant::R2);
        assert_eq!(config.model, ModelSource::Default { seed: 0 });
    }

    #[test]
    fn model_override_accepts_paths() {
        let overrides = Overrides {
            model: Some("some/model.json".to_string()),
            ..Overrides::default()
        };
        let config = resolve_config(None, &overrides).unwrap();
        assert_eq!(
            config.model,
            ModelSource::File {
                path: PathBuf::from("some/model.json")
            }
        );
    }

    #[test]
    fn exit_codes_distinguish_validation_from_runtime() {
        let validation = CliError::Invalid("bad".into());
        assert_eq!(validation.exit_code(), 1);
        let runtime = CliError::Artifact(ArtifactError::Io {
            path: PathBuf::from("x"),
            source: std::io::Error::new(std::io::ErrorKind::PermissionDenied, "denied"),
        });
        assert_eq!(runtime.exit_code(), 2);
        let missing = CliError::Artifact(ArtifactError::Io {
            path: PathBuf::from("x"),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing"),
        });
        assert_eq!(missing.exit_code(), 1);
    }
}
