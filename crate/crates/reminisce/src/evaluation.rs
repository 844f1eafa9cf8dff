//! Evaluation harness: rollout batches, the random baseline, top-policy
//! selection, interaction traces, and an exact dynamic-programming value
//! oracle to cross-check the Monte-Carlo estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{PwdChoice, PwdState, RewardSpec, RobotAction};
use crate::patient::TransitionModel;
use crate::qlearning::{greedy_policy, PolicyTable, QTable, TrainLog};
use crate::rng::{self, Stream};
use crate::session::{Session, SessionConfig};

/// One recorded interaction step: the state the robot saw, the action it
/// took (zero-based, `6` is the choice prompt) and, on choice steps, the
/// patient's pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u32,
    pub state: [i8; 3],
    pub action: u8,
    pub choice: Option<PwdChoice>,
}

/// One episode's rows, steps numbered from 0.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub rows: Vec<TraceRow>,
}

/// Where a batch of episodes draws its randomness: episode `i` runs on
/// `stream(seed, purpose, index_base + i)`, so batches are reproducible and
/// embarrassingly parallel.
#[derive(Debug, Clone, Copy)]
pub struct RolloutPlan<'a> {
    pub seed: u64,
    pub purpose: &'a str,
    pub index_base: u64,
}

impl<'a> RolloutPlan<'a> {
    pub fn new(seed: u64, purpose: &'a str) -> Self {
        RolloutPlan {
            seed,
            purpose,
            index_base: 0,
        }
    }

    pub fn offset(self, delta: u64) -> Self {
        RolloutPlan {
            index_base: self.index_base + delta,
            ..self
        }
    }

    fn stream(&self, episode: u64) -> Stream {
        rng::stream(self.seed, self.purpose, self.index_base + episode)
    }
}

/// Aggregate of a rollout batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStats {
    pub mean_return: f64,
    pub std_error: f64,
    pub episodes: usize,
    /// Traces of the first episodes of the batch, as requested.
    pub traces: Vec<EpisodeTrace>,
}

fn summarize(returns: &[f64]) -> (f64, f64) {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    if returns.len() < 2 {
        return (mean, 0.0);
    }
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run one episode under `act`, honoring the forced choice rule.
fn run_episode(
    act: &mut dyn FnMut(&Session, &QTableView, &mut Stream) -> RobotAction,
    view: &QTableView,
    model: &TransitionModel,
    spec: &RewardSpec,
    session_cfg: SessionConfig,
    rng: &mut Stream,
    record: bool,
) -> (f64, Option<EpisodeTrace>) {
    let mut session = Session::new(session_cfg);
    let mut total = 0.0;
    let mut trace = record.then(EpisodeTrace::default);
    let mut step = 0u32;

    while !session.done() {
        let state = session.current();
        let action = if session.forced_action_required() {
            RobotAction::GiveChoices
        } else {
            act(&session, view, rng)
        };
        let outcome = session
            .step(action, model, spec, rng)
            .expect("the loop only takes legal actions");
        total += outcome.reward;
        if let Some(trace) = trace.as_mut() {
            trace.rows.push(TraceRow {
                step,
                state: state.trace_code(),
                action: action.index() as u8,
                choice: outcome.forced_choice_taken,
            });
        }
        step += 1;
    }
    (total, trace)
}

/// Either a fixed policy or nothing; keeps `run_episode` monomorphic.
enum QTableView {
    Policy(PolicyTable),
    None,
}

/// Roll a fixed policy for `n` episodes and record the first
/// `record_traces` of them.
pub fn rollout_policy(
    policy: &PolicyTable,
    model: &TransitionModel,
    spec: &RewardSpec,
    session_cfg: SessionConfig,
    plan: RolloutPlan<'_>,
    n: usize,
    record_traces: usize,
) -> RolloutStats {
    let view = QTableView::Policy(*policy);
    let results: Vec<(f64, Option<EpisodeTrace>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = plan.stream(i);
            let mut act = |session: &Session, view: &QTableView, _rng: &mut Stream| match view {
                QTableView::Policy(p) => p.action(session.current()),
                QTableView::None => unreachable!(),
            };
            run_episode(
                &mut act,
                &view,
                model,
                spec,
                session_cfg,
                &mut rng,
                (i as usize) < record_traces,
            )
        })
        .collect();

    let returns: Vec<f64> = results.iter().map(|(r, _)| *r).collect();
    let (mean_return, std_error) = summarize(&returns);
    RolloutStats {
        mean_return,
        std_error,
        episodes: n,
        traces: results.into_iter().filter_map(|(_, t)| t).collect(),
    }
}

/// Mean return of episodes taking uniform random learnable actions
/// (the forced choice rule still applies).
pub fn random_baseline(
    model: &TransitionModel,
    spec: &RewardSpec,
    session_cfg: SessionConfig,
    plan: RolloutPlan<'_>,
    episodes: usize,
) -> f64 {
    let returns: Vec<f64> = (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = plan.stream(i);
            let mut act = |_: &Session, _: &QTableView, rng: &mut Stream| {
                use rand::Rng;
                RobotAction::LEARNABLE[rng.random_range(0..RobotAction::LEARNABLE.len())]
            };
            run_episode(
                &mut act,
                &QTableView::None,
                model,
                spec,
                session_cfg,
                &mut rng,
                false,
            )
            .0
        })
        .collect();
    summarize(&returns).0
}

/// Exact expected undiscounted return of a fixed policy.
///
/// Backward induction over the augmented space (state, saturated bad
/// streak, round, triggers). The choice prompt is expanded analytically
/// over its three outcomes, so no sampling is involved anywhere.
pub fn exact_policy_value(
    policy: &PolicyTable,
    model: &TransitionModel,
    spec: &RewardSpec,
    session_cfg: SessionConfig,
) -> f64 {
    let rounds = session_cfg.max_rounds as usize;
    let triggers = session_cfg.max_triggers as usize;
    let initial = PwdState::INITIAL;
    let choice_reward = |s: PwdState| spec.reward(s, RobotAction::GiveChoices);

    // value[g][s][k]: expected remaining return with g triggers discussed,
    // current state s and saturated bad streak k (2 = choice forced).
    // Starts as the all-zero value at the round cap.
    let mut value = vec![[[0.0f64; 3]; PwdState::COUNT]; triggers + 1];

    for _round in (0..rounds).rev() {
        let mut next_value = vec![[[0.0f64; 3]; PwdState::COUNT]; triggers + 1];
        for g in 1..triggers {
            for s in PwdState::all() {
                let si = s.index();
                for k in 0..3usize {
                    next_value[g][si][k] = if k >= 2 {
                        let dist = model.choice_distribution(s);
                        let stop = dist.prob(PwdChoice::Stop) * choice_reward(s);
                        let cont = dist.prob(PwdChoice::Continue)
                            * (choice_reward(s) + value[g][si][0]);
                        let change_future = if g + 1 >= triggers {
                            0.0
                        } else {
                            value[g + 1][initial.index()][0]
                        };
                        let change = dist.prob(PwdChoice::ChangeTrigger)
                            * (choice_reward(initial) + change_future);
                        stop + cont + change
                    } else {
                        let action = policy.action(s);
                        let row = model.row(s, action);
                        let mut acc = 0.0;
                        for next in PwdState::all() {
                            let streak = if next.is_bad() { (k + 1).min(2) } else { 0 };
                            acc += row[next.index()]
                                * (spec.reward(next, action) + value[g][next.index()][streak]);
                        }
                        acc
                    };
                }
            }
        }
        value = next_value;
    }

    if rounds == 0 || triggers <= 1 {
        return 0.0;
    }
    value[1][initial.index()][0]
}

/// Knobs of the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Rollouts per epoch for the greedy curve.
    pub greedy_rollouts_per_epoch: usize,
    /// How many of the most frequent snapshot policies become candidates.
    pub top_k: usize,
    /// Rollouts per candidate when picking the final policy.
    pub candidate_rollouts: usize,
    /// Recorded interaction traces of the final policy.
    pub final_traces: usize,
    /// Snapshot count the report requires from the training log.
    pub snapshot_window: usize,
    /// Monte-Carlo episodes per oracle cross-check.
    pub dp_episodes: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            greedy_rollouts_per_epoch: 40,
            top_k: 5,
            candidate_rollouts: 1000,
            final_traces: 20,
            snapshot_window: 600,
            dp_episodes: 100_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("training log holds {have} policy snapshots, need {need} (schedule too small)")]
    InsufficientSnapshots { have: usize, need: usize },
}

/// Per-epoch series of the report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub epsilon_greedy: Vec<f64>,
    pub greedy: Vec<f64>,
    pub random: Vec<f64>,
    pub q_sum: Vec<f64>,
    pub q_update: Vec<f64>,
}

/// A top-frequency candidate and its evaluation.
#[derive(Debug, Clone)]
pub struct PolicyCandidate {
    pub policy: PolicyTable,
    pub count: usize,
    pub mean_return: f64,
    pub std_error: f64,
}

/// Monte-Carlo vs. exact value comparison for one policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpCheck {
    pub label: String,
    pub policy_id: u64,
    pub exact_value: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    pub mc_episodes: usize,
    /// `|mc - exact|` in standard errors.
    pub sigma_distance: f64,
    /// True when the distance is at most four standard errors.
    pub within_tolerance: bool,
}

/// Everything the evaluation protocol produces for one training run.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub curves: CurveSet,
    /// Distinct snapshot policies with counts, most frequent first
    /// (ties by ascending policy id).
    pub policy_frequency: Vec<(PolicyTable, usize)>,
    pub top_policies: Vec<PolicyCandidate>,
    pub final_policy: PolicyTable,
    pub final_policy_mean: f64,
    pub final_policy_std_error: f64,
    pub final_policy_episodes: usize,
    pub traces: Vec<EpisodeTrace>,
    pub dp_checks: Vec<DpCheck>,
}

/// Assemble the full report from a finished training log.
///
/// `seed` drives every evaluation stream; reports are bit-reproducible from
/// `(log, model, spec, seed, params)`.
pub fn build_report(
    log: &TrainLog,
    model: &TransitionModel,
    spec: &RewardSpec,
    seed: u64,
    params: &EvalParams,
) -> Result<EvalReport, EvalError> {
    if log.final_snapshots.len() < params.snapshot_window {
        return Err(EvalError::InsufficientSnapshots {
            have: log.final_snapshots.len(),
            need: params.snapshot_window,
        });
    }
    let session_cfg = log.config.session;

    let mut curves = CurveSet::default();
    for record in &log.epochs {
        curves.epsilon_greedy.push(record.avg_return);
        curves.q_sum.push(record.q_sum);
        curves.q_update.push(record.q_update);
    }

    let greedy_n = params.greedy_rollouts_per_epoch;
    curves.greedy = log
        .temporal_policies
        .par_iter()
        .enumerate()
        .map(|(epoch, policy)| {
            let plan = RolloutPlan::new(seed, rng::purpose::EVAL_GREEDY)
                .offset(epoch as u64 * greedy_n as u64);
            rollout_policy(policy, model, spec, session_cfg, plan, greedy_n, 0).mean_return
        })
        .collect();

    let per_epoch = log.config.episodes_per_epoch as usize;
    curves.random = (0..log.epochs.len())
        .into_par_iter()
        .map(|epoch| {
            let plan = RolloutPlan::new(seed, rng::purpose::EVAL_RANDOM)
                .offset(epoch as u64 * per_epoch as u64);
            random_baseline(model, spec, session_cfg, plan, per_epoch)
        })
        .collect();

    let selection = select_final_policy(log, model, spec, seed, params)?;
    let FinalSelection {
        policy_frequency,
        top_policies,
        policy: final_policy,
        mean_return: final_policy_mean,
        std_error: final_policy_std_error,
    } = selection;

    let traces = rollout_policy(
        &final_policy,
        model,
        spec,
        session_cfg,
        RolloutPlan::new(seed, rng::purpose::EVAL_TRACE),
        params.final_traces,
        params.final_traces,
    )
    .traces;

    let dp_targets = [
        ("final_policy".to_string(), final_policy),
        ("all_a1".to_string(), PolicyTable::uniform(RobotAction::EasyPrompt)),
        ("all_a3".to_string(), PolicyTable::uniform(RobotAction::DifficultPrompt)),
    ];
    let dp_checks = dp_targets
        .into_iter()
        .enumerate()
        .map(|(slot, (label, policy))| {
            let plan = RolloutPlan::new(seed, rng::purpose::DP_CHECK)
                .offset(slot as u64 * params.dp_episodes as u64);
            dp_check(label, &policy, model, spec, session_cfg, plan, params.dp_episodes)
        })
        .collect();

    Ok(EvalReport {
        curves,
        policy_frequency,
        top_policies,
        final_policy,
        final_policy_mean,
        final_policy_std_error,
        final_policy_episodes: params.candidate_rollouts,
        traces,
        dp_checks,
    })
}

/// Outcome of the top-policy selection protocol.
#[derive(Debug, Clone)]
pub struct FinalSelection {
    pub policy_frequency: Vec<(PolicyTable, usize)>,
    pub top_policies: Vec<PolicyCandidate>,
    pub policy: PolicyTable,
    pub mean_return: f64,
    pub std_error: f64,
}

/// Count the snapshot window, evaluate the most frequent candidates, and
/// pick the one with the best mean return (ties to the lowest policy id).
pub fn select_final_policy(
    log: &TrainLog,
    model: &TransitionModel,
    spec: &RewardSpec,
    seed: u64,
    params: &EvalParams,
) -> Result<FinalSelection, EvalError> {
    if log.final_snapshots.len() < params.snapshot_window {
        return Err(EvalError::InsufficientSnapshots {
            have: log.final_snapshots.len(),
            need: params.snapshot_window,
        });
    }
    let session_cfg = log.config.session;
    let window = &log.final_snapshots[log.final_snapshots.len() - params.snapshot_window..];
    let policy_frequency = count_policies(window);

    let top_policies: Vec<PolicyCandidate> = policy_frequency
        .iter()
        .take(params.top_k)
        .enumerate()
        .map(|(rank, (policy, count))| {
            let plan = RolloutPlan::new(seed, rng::purpose::EVAL_POLICY)
                .offset(rank as u64 * params.candidate_rollouts as u64);
            let stats = rollout_policy(
                policy,
                model,
                spec,
                session_cfg,
                plan,
                params.candidate_rollouts,
                0,
            );
            PolicyCandidate {
                policy: *policy,
                count: *count,
                mean_return: stats.mean_return,
                std_error: stats.std_error,
            }
        })
        .collect();

    let best = top_policies
        .iter()
        .max_by(|a, b| {
            a.mean_return
                .partial_cmp(&b.mean_return)
                .expect("returns are finite")
                .then(b.policy.policy_id().cmp(&a.policy.policy_id()))
        })
        .expect("at least one snapshot policy exists");
    Ok(FinalSelection {
        policy: best.policy,
        mean_return: best.mean_return,
        std_error: best.std_error,
        policy_frequency,
        top_policies,
    })
}

/// Compare a Monte-Carlo estimate against the exact oracle value.
pub fn dp_check(
    label: String,
    policy: &PolicyTable,
    model: &TransitionModel,
    spec: &RewardSpec,
    session_cfg: SessionConfig,
    plan: RolloutPlan<'_>,
    episodes: usize,
) -> DpCheck {
    let exact = exact_policy_value(policy, model, spec, session_cfg);
    let stats = rollout_policy(policy, model, spec, session_cfg, plan, episodes, 0);
    let sigma_distance = if stats.std_error > 0.0 {
        (stats.mean_return - exact).abs() / stats.std_error
    } else {
        // Deterministic rollouts: exact agreement or an outright failure.
        if (stats.mean_return - exact).abs() < 1e-9 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    DpCheck {
        label,
        policy_id: policy.policy_id(),
        exact_value: exact,
        mc_mean: stats.mean_return,
        mc_std_error: stats.std_error,
        mc_episodes: episodes,
        sigma_distance,
        within_tolerance: sigma_distance <= 4.0,
    }
}

/// Count distinct policies, most frequent first, ties by ascending id.
pub fn count_policies(snapshots: &[PolicyTable]) -> Vec<(PolicyTable, usize)> {
    use std::collections::HashMap;
    let mut counts: HashMap<PolicyTable, usize> = HashMap::new();
    for p in snapshots {
        *counts.entry(*p).or_default() += 1;
    }
    let mut ordered: Vec<(PolicyTable, usize)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.policy_id().cmp(&b.0.policy_id())));
    ordered
}

/// Greedy probe of a Q snapshot, exposed for sensitivity experiments.
pub fn greedy_probe(
    q: &QTable,
    model: &TransitionModel,
    spec: &RewardSpec,
    session_cfg: SessionConfig,
    plan: RolloutPlan<'_>,
    n: usize,
) -> RolloutStats {
    let policy = greedy_policy(q);
    rollout_policy(&policy, model, spec, session_cfg, plan, n, 0)
}
