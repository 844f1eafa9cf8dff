//! On-disk artifact formats.
//!
//! JSON for structured tables, CSV for per-epoch and per-step series. All
//! floats are serialized in shortest round-trip form and parsed exactly, so
//! every artifact regenerates bit-identically from its manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::domain::{PwdState, RobotAction};
use crate::evaluation::{CurveSet, DpCheck, EpisodeTrace, EvalReport};
use crate::qlearning::{EpochRecord, PolicyTable, QTable, TrainConfig, TrainLog};

pub const QTABLE_FILE: &str = "qtable.json";
pub const TRAINLOG_FILE: &str = "trainlog.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOTS_FILE: &str = "snapshots.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const POLICY_FREQ_FILE: &str = "policy_freq.json";
pub const FINAL_POLICY_FILE: &str = "final_policy.json";
pub const TRACES_FILE: &str = "traces.csv";
pub const DP_CHECK_FILE: &str = "dp_check.json";

const ORDERING: &str = "response-major";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn schema_err(path: &Path, message: impl Into<String>) -> ArtifactError {
    ArtifactError::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ArtifactError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Q-table
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct QTableFile {
    q: Vec<Vec<f64>>,
    ordering: String,
}

/// The `qtable.json` document as a string.
pub fn qtable_json_string(q: &QTable) -> String {
    let file = QTableFile {
        q: q.values().iter().map(|row| row.to_vec()).collect(),
        ordering: ORDERING.to_string(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("tables serialize");
    text.push('\n');
    text
}

pub fn write_qtable(path: &Path, q: &QTable) -> Result<(), ArtifactError> {
    let text = qtable_json_string(q);
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_qtable(path: &Path) -> Result<QTable, ArtifactError> {
    let file: QTableFile = read_json(path)?;
    if file.ordering != ORDERING {
        return Err(schema_err(
            path,
            format!("unsupported ordering {:?}", file.ordering),
        ));
    }
    if file.q.len() != PwdState::COUNT {
        return Err(schema_err(path, format!("expected 18 rows, got {}", file.q.len())));
    }
    let mut values = [[0.0; 6]; PwdState::COUNT];
    for (i, row) in file.q.iter().enumerate() {
        if row.len() != 6 {
            return Err(schema_err(path, format!("row {i} has {} entries", row.len())));
        }
        values[i].copy_from_slice(row);
    }
    Ok(QTable::from_values(values))
}

// ---------------------------------------------------------------------------
// Training log
// ---------------------------------------------------------------------------

pub fn write_trainlog(path: &Path, log: &TrainLog) -> Result<(), ArtifactError> {
    let mut w = csv::Writer::from_path(path).map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut emit = || -> csv::Result<()> {
        w.write_record(["epoch", "avg_return", "q_sum", "q_update"])?;
        for (epoch, r) in log.epochs.iter().enumerate() {
            w.write_record([
                epoch.to_string(),
                r.avg_return.to_string(),
                r.q_sum.to_string(),
                r.q_update.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)
    };
    emit().map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_trainlog_epochs(path: &Path) -> Result<Vec<EpochRecord>, ArtifactError> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut epochs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| ArtifactError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |i: usize| -> Result<f64, ArtifactError> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| schema_err(path, format!("bad numeric field {i}")))
        };
        epochs.push(EpochRecord {
            avg_return: field(1)?,
            q_sum: field(2)?,
            q_update: field(3)?,
        });
    }
    Ok(epochs)
}

// ---------------------------------------------------------------------------
// Policy snapshots
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SnapshotsFile {
    /// Greedy policy at each epoch's probe episode, as action indices.
    temporal: Vec<Vec<u8>>,
    /// Greedy policies after each of the final episodes.
    last_episodes: Vec<Vec<u8>>,
}

fn policy_to_indices(p: &PolicyTable) -> Vec<u8> {
    p.actions().iter().map(|a| a.index() as u8).collect()
}

fn policy_from_indices(path: &Path, indices: &[u8]) -> Result<PolicyTable, ArtifactError> {
    if indices.len() != PwdState::COUNT {
        return Err(schema_err(path, "policy must list 18 actions"));
    }
    let mut actions = [RobotAction::EasyPrompt; PwdState::COUNT];
    for (i, &idx) in indices.iter().enumerate() {
        let action = RobotAction::from_index(idx as usize)
            .filter(|a| a.is_learnable())
            .ok_or_else(|| schema_err(path, format!("bad action index {idx}")))?;
        actions[i] = action;
    }
    Ok(PolicyTable::from_actions(actions))
}

pub fn write_snapshots(path: &Path, log: &TrainLog) -> Result<(), ArtifactError> {
    let file = SnapshotsFile {
        temporal: log.temporal_policies.iter().map(policy_to_indices).collect(),
        last_episodes: log.final_snapshots.iter().map(policy_to_indices).collect(),
    };
    write_json(path, &file)
}

pub fn read_snapshots(
    path: &Path,
) -> Result<(Vec<PolicyTable>, Vec<PolicyTable>), ArtifactError> {
    let file: SnapshotsFile = read_json(path)?;
    let temporal = file
        .temporal
        .iter()
        .map(|p| policy_from_indices(path, p))
        .collect::<Result<_, _>>()?;
    let last = file
        .last_episodes
        .iter()
        .map(|p| policy_from_indices(path, p))
        .collect::<Result<_, _>>()?;
    Ok((temporal, last))
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Everything needed to regenerate one seed's artifacts bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// `sha256:<hex>` per artifact file name.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, ArtifactError> {
    use sha2::{Digest, Sha256};
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(format!("sha256:{:x}", Sha256::digest(&bytes)))
}

/// Write `manifest.json` for a seed directory, hashing the named files.
pub fn write_manifest(
    dir: &Path,
    seed: u64,
    config: &ExperimentConfig,
    files: &[&str],
) -> Result<(), ArtifactError> {
    let mut artifacts = BTreeMap::new();
    for name in files {
        artifacts.insert(name.to_string(), sha256_file(&dir.join(name))?);
    }
    let manifest = Manifest {
        tool: ToolInfo::default(),
        seed,
        config: config.clone(),
        artifacts,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, ArtifactError> {
    read_json(path)
}

/// Rebuild the in-memory training log from a seed directory written by the
/// train command.
pub fn load_train_log(dir: &Path) -> Result<(TrainConfig, TrainLog), ArtifactError> {
    let manifest = read_manifest(&dir.join(MANIFEST_FILE))?;
    let train_config = manifest.config.train_config(manifest.seed);
    let epochs = read_trainlog_epochs(&dir.join(TRAINLOG_FILE))?;
    let (temporal_policies, final_snapshots) = read_snapshots(&dir.join(SNAPSHOTS_FILE))?;
    let log = TrainLog {
        config: train_config.clone(),
        epochs,
        temporal_policies,
        final_snapshots,
    };
    Ok((train_config, log))
}

// ---------------------------------------------------------------------------
// Evaluation artifacts
// ---------------------------------------------------------------------------

pub fn write_curves(path: &Path, curves: &CurveSet) -> Result<(), ArtifactError> {
    let mut w = csv::Writer::from_path(path).map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut emit = || -> csv::Result<()> {
        w.write_record([
            "epoch",
            "epsilon_greedy_ql",
            "greedy_ql",
            "random_action",
            "q_sum",
            "q_update",
        ])?;
        for epoch in 0..curves.epsilon_greedy.len() {
            w.write_record([
                epoch.to_string(),
                curves.epsilon_greedy[epoch].to_string(),
                curves.greedy[epoch].to_string(),
                curves.random[epoch].to_string(),
                curves.q_sum[epoch].to_string(),
                curves.q_update[epoch].to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)
    };
    emit().map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn state_key(state: PwdState) -> String {
    let [r, e, c] = state.trace_code();
    format!("[{r},{e},{c}]")
}

fn parse_state_key(path: &Path, key: &str) -> Result<PwdState, ArtifactError> {
    let inner = key
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| schema_err(path, format!("bad state key {key:?}")))?;
    let parts: Vec<i8> = inner
        .split(',')
        .map(|p| p.trim().parse::<i8>())
        .collect::<Result<_, _>>()
        .map_err(|_| schema_err(path, format!("bad state key {key:?}")))?;
    let code: [i8; 3] = parts
        .try_into()
        .map_err(|_| schema_err(path, format!("bad state key {key:?}")))?;
    PwdState::from_trace_code(code)
        .ok_or_else(|| schema_err(path, format!("bad state key {key:?}")))
}

fn policy_actions_map(policy: &PolicyTable) -> BTreeMap<String, String> {
    PwdState::all()
        .map(|s| (state_key(s), policy.action(s).label().to_string()))
        .collect()
}

fn policy_from_actions_map(
    path: &Path,
    map: &BTreeMap<String, String>,
) -> Result<PolicyTable, ArtifactError> {
    let mut actions = [RobotAction::EasyPrompt; PwdState::COUNT];
    let mut seen = [false; PwdState::COUNT];
    for (key, label) in map {
        let state = parse_state_key(path, key)?;
        let action = RobotAction::from_label(label)
            .filter(|a| a.is_learnable())
            .ok_or_else(|| schema_err(path, format!("bad action label {label:?}")))?;
        actions[state.index()] = action;
        seen[state.index()] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(schema_err(path, "policy must cover all 18 states"));
    }
    Ok(PolicyTable::from_actions(actions))
}

#[derive(Serialize, Deserialize)]
struct PolicyFreqEntry {
    policy_id: u64,
    count: usize,
    actions: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct PolicyFreqFile {
    total_snapshots: usize,
    policies: Vec<PolicyFreqEntry>,
}

pub fn write_policy_freq(
    path: &Path,
    frequency: &[(PolicyTable, usize)],
) -> Result<(), ArtifactError> {
    let total = frequency.iter().map(|(_, c)| c).sum();
    let file = PolicyFreqFile {
        total_snapshots: total,
        policies: frequency
            .iter()
            .map(|(policy, count)| PolicyFreqEntry {
                policy_id: policy.policy_id(),
                count: *count,
                actions: policy_actions_map(policy),
            })
            .collect(),
    };
    write_json(path, &file)
}

#[derive(Serialize, Deserialize)]
struct FinalPolicyFile {
    policy_id: u64,
    mean_return: f64,
    std_error: f64,
    episodes: usize,
    actions: BTreeMap<String, String>,
}

pub fn write_final_policy(path: &Path, report: &EvalReport) -> Result<(), ArtifactError> {
    let file = FinalPolicyFile {
        policy_id: report.final_policy.policy_id(),
        mean_return: report.final_policy_mean,
        std_error: report.final_policy_std_error,
        episodes: report.final_policy_episodes,
        actions: policy_actions_map(&report.final_policy),
    };
    write_json(path, &file)
}

/// Read a policy from either a final-policy document or a bare actions map.
pub fn read_policy(path: &Path) -> Result<PolicyTable, ArtifactError> {
    let value: serde_json::Value = read_json(path)?;
    let map_value = value.get("actions").unwrap_or(&value);
    let map: BTreeMap<String, String> = serde_json::from_value(map_value.clone())
        .map_err(|source| ArtifactError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    policy_from_actions_map(path, &map)
}

/// Table-2-style trace rows: `step,state,action,choice` with the state as an
/// integer triple. Steps restart at 0 on each episode boundary.
pub fn write_traces(path: &Path, traces: &[EpisodeTrace]) -> Result<(), ArtifactError> {
    let mut w = csv::Writer::from_path(path).map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut emit = || -> csv::Result<()> {
        w.write_record(["step", "state", "action", "choice"])?;
        for trace in traces {
            for row in &trace.rows {
                let [r, e, c] = row.state;
                w.write_record([
                    row.step.to_string(),
                    format!("[{r}, {e}, {c}]"),
                    row.action.to_string(),
                    row.choice.map(|ch| ch.label().to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush().map_err(csv::Error::from)
    };
    emit().map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_dp_checks(path: &Path, checks: &[DpCheck]) -> Result<(), ArtifactError> {
    write_json(path, &checks.to_vec())
}

/// Write the full evaluation report into a seed directory.
pub fn write_eval_report(dir: &Path, report: &EvalReport) -> Result<(), ArtifactError> {
    write_curves(&dir.join(CURVES_FILE), &report.curves)?;
    write_policy_freq(&dir.join(POLICY_FREQ_FILE), &report.policy_frequency)?;
    write_final_policy(&dir.join(FINAL_POLICY_FILE), report)?;
    write_traces(&dir.join(TRACES_FILE), &report.traces)?;
    write_dp_checks(&dir.join(DP_CHECK_FILE), &report.dp_checks)
}

// ---------------------------------------------------------------------------
// Reward comparison
// ---------------------------------------------------------------------------

/// Side-by-side final policies for one seed, keyed by state.
pub fn write_policy_comparison(
    path: &Path,
    r1: &PolicyTable,
    r2: &PolicyTable,
) -> Result<(), ArtifactError> {
    let mut w = csv::Writer::from_path(path).map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut emit = || -> csv::Result<()> {
        w.write_record(["state", "r1_action", "r2_action"])?;
        for s in PwdState::all() {
            let [r, e, c] = s.trace_code();
            w.write_record([
                format!("[{r}, {e}, {c}]"),
                r1.action(s).label().to_string(),
                r2.action(s).label().to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)
    };
    emit().map_err(|source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<(), ArtifactError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ArtifactError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
