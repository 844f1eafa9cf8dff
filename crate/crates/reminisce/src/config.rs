//! Experiment configuration: the JSON config file, CLI overrides, and the
//! fail-fast validation that runs before any computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::RewardVariant;
use crate::patient::{self, ChoiceDistribution, ModelError, TransitionModel};
use crate::qlearning::{SpecialUpdateBranch, TrainConfig};
use crate::session::SessionConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Invalid(String),
    #[error("config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("model file {path}: {source}")]
    Model { path: PathBuf, source: ModelError },
}

/// Where the patient model comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    /// Generated by the bundled generator with this seed.
    Default { seed: u64 },
    /// Loaded from a model JSON document.
    File { path: PathBuf },
}

impl Default for ModelSource {
    fn default() -> Self {
        ModelSource::Default { seed: 0 }
    }
}

/// Training hyper-parameters as they appear in the config file. The run
/// seed and reward variant live at the experiment level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epochs: u32,
    pub episodes_per_epoch: u32,
    pub special_branch: SpecialUpdateBranch,
    pub session: SessionConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSettings {
            alpha: d.alpha,
            gamma: d.gamma,
            epsilon: d.epsilon,
            epochs: d.epochs,
            episodes_per_epoch: d.episodes_per_epoch,
            special_branch: d.special_branch,
            session: d.session,
        }
    }
}

/// Optional override of the model's choice distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceOverride {
    pub stop: f64,
    #[serde(rename = "continue")]
    pub cont: f64,
    pub change: f64,
}

/// One experiment: a model, a reward preset, a training schedule, and the
/// seeds to run it under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub train: TrainSettings,
    pub model: ModelSource,
    pub reward_variant: RewardVariant,
    /// Replaces the model's choice distribution when present.
    pub choice_distribution: Option<ChoiceOverride>,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainSettings::default(),
            model: ModelSource::default(),
            reward_variant: RewardVariant::R1,
            choice_distribution: None,
            output_dir: PathBuf::from("out"),
            seeds: vec![0],
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(config)
    }

    /// Check every invariant and referenced file, returning the resolved
    /// patient model. Nothing is computed before this passes.
    pub fn validate(&self) -> Result<TransitionModel, ConfigError> {
        self.train_config(0).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must not be empty".into()));
        }
        if self.reward_variant == RewardVariant::Custom {
            return Err(ConfigError::Invalid(
                "reward_variant must be R1 or R2".into(),
            ));
        }

        let mut model = match &self.model {
            ModelSource::Default { seed } => patient::default_model(*seed),
            ModelSource::File { path } => {
                TransitionModel::load(path).map_err(|source| ConfigError::Model {
                    path: path.clone(),
                    source,
                })?
            }
        };
        if let Some(c) = &self.choice_distribution {
            let dist = ChoiceDistribution::new(c.stop, c.cont, c.change).map_err(|e| {
                ConfigError::Invalid(format!("choice_distribution override: {e}"))
            })?;
            model = model.with_choice(dist);
        }
        Ok(model)
    }

    /// The full trainer config for one run seed.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            alpha: self.train.alpha,
            gamma: self.train.gamma,
            epsilon: self.train.epsilon,
            epochs: self.train.epochs,
            episodes_per_epoch: self.train.episodes_per_epoch,
            seed,
            reward_variant: self.reward_variant,
            special_branch: self.train.special_branch,
            session: self.train.session,
        }
    }

    /// Subdirectory holding one seed's artifacts.
    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.output_dir.join(format!("seed_{seed}"))
    }
}
