//! Stochastic model of the simulated patient.
//!
//! The model holds one 18x18 row-stochastic transition matrix per learnable
//! robot action (row = current state index, column = next state index) and a
//! distribution over the three outcomes of the choice prompt. Models are
//! immutable once constructed and structurally validated (row sums within
//! [`STOCHASTIC_TOL`] of 1, entries in `[0, 1]`); qualitative behaviour is
//! checked separately by [`TransitionModel::validate`].
//!
//! The bundled default generator produces a baseline behaviour profile and
//! applies multiplicative difficulty/bad-moment adjustments with per-factor
//! renormalization. Its numbers are configurable artifact defaults, not
//! estimates from patient data.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Confusion, EmotionLevel, PwdChoice, PwdState, ResponseRelevance, RobotAction};
use crate::rng::Stream;

/// Tolerance for row and distribution sums.
pub const STOCHASTIC_TOL: f64 = 1e-6;

/// Slack for the qualitative inequality checks, absorbing float noise only.
const CMP_EPS: f64 = 1e-12;

/// One transition matrix: `row[current][next]`.
pub type TransitionMatrix = [[f64; PwdState::COUNT]; PwdState::COUNT];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("action {action} row {row} sums to {sum:.9}, expected 1 within {STOCHASTIC_TOL:e}")]
    RowSum { action: RobotAction, row: usize, sum: f64 },
    #[error("action {action} entry [{row}][{col}] = {value} is not a probability")]
    EntryRange { action: RobotAction, row: usize, col: usize, value: f64 },
    #[error("choice distribution sums to {sum:.9}, expected 1 within {STOCHASTIC_TOL:e}")]
    ChoiceSum { sum: f64 },
    #[error("choice probability {value} is not in [0, 1]")]
    ChoiceRange { value: f64 },
    #[error("model file: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Distribution over the outcomes of the choice prompt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceDistribution {
    probs: [f64; 3], // indexed by PwdChoice: stop, continue, change
}

impl ChoiceDistribution {
    pub fn new(stop: f64, cont: f64, change: f64) -> Result<Self, ModelError> {
        for value in [stop, cont, change] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ModelError::ChoiceRange { value });
            }
        }
        let sum = stop + cont + change;
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(ModelError::ChoiceSum { sum });
        }
        Ok(ChoiceDistribution {
            probs: [stop, cont, change],
        })
    }

    pub fn prob(&self, choice: PwdChoice) -> f64 {
        self.probs[choice.ordinal()]
    }
}

/// Free-form description of where a model came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub provenance: String,
}

/// The full patient model: one matrix per learnable action plus the choice
/// distribution (optionally conditioned on the current state).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    matrices: Box<[TransitionMatrix; 6]>,
    choice: ChoiceDistribution,
    choice_by_state: Option<Box<[ChoiceDistribution; PwdState::COUNT]>>,
    metadata: ModelMetadata,
}

impl TransitionModel {
    /// Build a model from raw parts, enforcing the structural invariants.
    /// Rows are never renormalized here; out-of-tolerance input fails loudly.
    pub fn new(
        matrices: [TransitionMatrix; 6],
        choice: ChoiceDistribution,
        metadata: ModelMetadata,
    ) -> Result<Self, ModelError> {
        for (ai, matrix) in matrices.iter().enumerate() {
            let action = RobotAction::LEARNABLE[ai];
            check_matrix(action, matrix)?;
        }
        Ok(TransitionModel {
            matrices: Box::new(matrices),
            choice,
            choice_by_state: None,
            metadata,
        })
    }

    /// Condition the choice outcome on the current state.
    pub fn with_choice_by_state(mut self, per_state: [ChoiceDistribution; PwdState::COUNT]) -> Self {
        self.choice_by_state = Some(Box::new(per_state));
        self
    }

    /// Replace the (state-independent) choice distribution.
    pub fn with_choice(mut self, choice: ChoiceDistribution) -> Self {
        self.choice = choice;
        self
    }

    pub fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    pub fn matrix(&self, action: RobotAction) -> &TransitionMatrix {
        assert!(action.is_learnable(), "no transition matrix for {action}");
        &self.matrices[action.index()]
    }

    /// Transition row for the current state under a learnable action.
    pub fn row(&self, state: PwdState, action: RobotAction) -> &[f64; PwdState::COUNT] {
        &self.matrix(action)[state.index()]
    }

    /// Choice distribution in effect for `state`.
    pub fn choice_distribution(&self, state: PwdState) -> &ChoiceDistribution {
        match &self.choice_by_state {
            Some(per_state) => &per_state[state.index()],
            None => &self.choice,
        }
    }

    /// Draw the next state. Consumes exactly one uniform draw from `rng`.
    pub fn sample_transition(
        &self,
        state: PwdState,
        action: RobotAction,
        rng: &mut Stream,
    ) -> PwdState {
        let row = self.row(state, action);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (next, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return PwdState::from_index(next);
            }
        }
        // Float tail: row sums to 1 within tolerance, fall back to the last state.
        PwdState::from_index(PwdState::COUNT - 1)
    }

    /// Draw the patient's choice. Consumes exactly one uniform draw.
    pub fn sample_choice(&self, state: PwdState, rng: &mut Stream) -> PwdChoice {
        let dist = self.choice_distribution(state);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for choice in PwdChoice::ALL {
            acc += dist.prob(choice);
            if u < acc {
                return choice;
            }
        }
        PwdChoice::ChangeTrigger
    }

    /// Evaluate every structural and qualitative constraint.
    ///
    /// Structural checks come first; when any of them fails the qualitative
    /// constraints are not evaluated. The report lists each individual check
    /// in a deterministic order.
    pub fn validate(&self) -> ModelConstraintReport {
        let mut findings = Vec::new();
        let mut structurally_sound = true;

        for action in RobotAction::LEARNABLE {
            let result = check_matrix(action, self.matrix(action));
            let ok = result.is_ok();
            structurally_sound &= ok;
            findings.push(ConstraintFinding {
                constraint: ConstraintId::Structural,
                actions: vec![action],
                states: Vec::new(),
                satisfied: ok,
                detail: match result {
                    Ok(()) => format!("{action}: all 18 rows stochastic"),
                    Err(e) => e.to_string(),
                },
            });
        }
        {
            let mut dists = vec![(None::<PwdState>, self.choice)];
            if let Some(per_state) = &self.choice_by_state {
                for s in PwdState::all() {
                    dists.push((Some(s), per_state[s.index()]));
                }
            }
            for (state, dist) in dists {
                let sum: f64 = PwdChoice::ALL.iter().map(|&c| dist.prob(c)).sum();
                let ok = (sum - 1.0).abs() <= STOCHASTIC_TOL;
                structurally_sound &= ok;
                findings.push(ConstraintFinding {
                    constraint: ConstraintId::Structural,
                    actions: vec![RobotAction::GiveChoices],
                    states: state.into_iter().collect(),
                    satisfied: ok,
                    detail: format!("choice distribution sums to {sum:.9}"),
                });
            }
        }

        if structurally_sound {
            self.check_difficulty_monotonicity(&mut findings);
            self.check_bad_moment_penalty(&mut findings);
            self.check_repair_actions(&mut findings);
            self.check_comfort(&mut findings);
        }

        ModelConstraintReport { findings }
    }

    /// C1: harder prompts lower the chance of relevant response and positive
    /// emotion and raise the chance of confusion, in every current state.
    fn check_difficulty_monotonicity(&self, findings: &mut Vec<ConstraintFinding>) {
        let prompts = [
            RobotAction::EasyPrompt,
            RobotAction::ModeratePrompt,
            RobotAction::DifficultPrompt,
        ];
        for s in PwdState::all() {
            for pair in prompts.windows(2) {
                let (easier, harder) = (pair[0], pair[1]);
                let checks = [
                    ("P(next response relevant)", marginal_rr(self.row(s, easier)), marginal_rr(self.row(s, harder)), true),
                    ("P(next emotion positive)", marginal_pos(self.row(s, easier)), marginal_pos(self.row(s, harder)), true),
                    ("P(next confused)", marginal_confused(self.row(s, easier)), marginal_confused(self.row(s, harder)), false),
                ];
                for (what, lhs, rhs, decreasing) in checks {
                    let satisfied = if decreasing {
                        lhs >= rhs - CMP_EPS
                    } else {
                        lhs <= rhs + CMP_EPS
                    };
                    let rel = if decreasing { ">=" } else { "<=" };
                    findings.push(ConstraintFinding {
                        constraint: ConstraintId::C1Difficulty,
                        actions: vec![easier, harder],
                        states: vec![s],
                        satisfied,
                        detail: format!("{what} at {s}: {easier}={lhs:.6} {rel} {harder}={rhs:.6}"),
                    });
                }
            }
        }
    }

    /// C2: with the same last response, a patient in a bad moment (negative
    /// emotion or confused) answers prompts relevantly no more often than an
    /// untroubled one.
    fn check_bad_moment_penalty(&self, findings: &mut Vec<ConstraintFinding>) {
        let prompts = [
            RobotAction::EasyPrompt,
            RobotAction::ModeratePrompt,
            RobotAction::DifficultPrompt,
        ];
        for r in ResponseRelevance::ALL {
            let same_response: Vec<PwdState> =
                PwdState::all().filter(|s| s.response == r).collect();
            for &bad in same_response.iter().filter(|s| s.is_bad()) {
                for &good in same_response.iter().filter(|s| !s.is_bad()) {
                    for a in prompts {
                        let p_bad = marginal_rr(self.row(bad, a));
                        let p_good = marginal_rr(self.row(good, a));
                        findings.push(ConstraintFinding {
                            constraint: ConstraintId::C2BadMoment,
                            actions: vec![a],
                            states: vec![bad, good],
                            satisfied: p_bad <= p_good + CMP_EPS,
                            detail: format!(
                                "P(next response relevant) under {a}: bad {bad}={p_bad:.6} <= good {good}={p_good:.6}"
                            ),
                        });
                    }
                }
            }
        }
    }

    /// C3: when the patient is confused, repeating or explaining the prompt
    /// raises the chance of a response (vs. the difficult prompt) and does
    /// not raise the chance of negative emotion.
    fn check_repair_actions(&self, findings: &mut Vec<ConstraintFinding>) {
        for s in PwdState::all().filter(|s| s.confusion == Confusion::Yes) {
            let base = self.row(s, RobotAction::DifficultPrompt);
            for a in [RobotAction::Repeat, RobotAction::Explain] {
                let row = self.row(s, a);
                let respond = marginal_responds(row);
                let respond_base = marginal_responds(base);
                findings.push(ConstraintFinding {
                    constraint: ConstraintId::C3Repair,
                    actions: vec![a, RobotAction::DifficultPrompt],
                    states: vec![s],
                    satisfied: respond >= respond_base - CMP_EPS,
                    detail: format!(
                        "P(next responds) at {s}: {a}={respond:.6} >= a3={respond_base:.6}"
                    ),
                });
                let neg = marginal_neg(row);
                let neg_base = marginal_neg(base);
                findings.push(ConstraintFinding {
                    constraint: ConstraintId::C3Repair,
                    actions: vec![a, RobotAction::DifficultPrompt],
                    states: vec![s],
                    satisfied: neg <= neg_base + CMP_EPS,
                    detail: format!(
                        "P(next emotion negative) at {s}: {a}={neg:.6} <= a3={neg_base:.6}"
                    ),
                });
            }
        }
    }

    /// C4: when the patient is in negative emotion, comforting beats the
    /// difficult prompt on relevant responses and does not worsen emotion.
    fn check_comfort(&self, findings: &mut Vec<ConstraintFinding>) {
        for s in PwdState::all().filter(|s| s.emotion == EmotionLevel::Negative) {
            let comfort = self.row(s, RobotAction::Comfort);
            let base = self.row(s, RobotAction::DifficultPrompt);
            let rr = marginal_rr(comfort);
            let rr_base = marginal_rr(base);
            findings.push(ConstraintFinding {
                constraint: ConstraintId::C4Comfort,
                actions: vec![RobotAction::Comfort, RobotAction::DifficultPrompt],
                states: vec![s],
                satisfied: rr >= rr_base - CMP_EPS,
                detail: format!("P(next response relevant) at {s}: a6={rr:.6} >= a3={rr_base:.6}"),
            });
            let neg = marginal_neg(comfort);
            let neg_base = marginal_neg(base);
            findings.push(ConstraintFinding {
                constraint: ConstraintId::C4Comfort,
                actions: vec![RobotAction::Comfort, RobotAction::DifficultPrompt],
                states: vec![s],
                satisfied: neg <= neg_base + CMP_EPS,
                detail: format!("P(next emotion negative) at {s}: a6={neg:.6} <= a3={neg_base:.6}"),
            });
        }
    }

    /// Serialize to the model file schema.
    pub fn to_json_string(&self) -> String {
        let file = ModelFile::from_model(self);
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    /// Parse and structurally validate a model document.
    pub fn from_json_str(json: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(json)?;
        file.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let json = std::fs::read_to_string(path)?;
        Self::from_json_str(&json)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

fn check_matrix(action: RobotAction, matrix: &TransitionMatrix) -> Result<(), ModelError> {
    for (row_idx, row) in matrix.iter().enumerate() {
        for (col, &value) in row.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(ModelError::EntryRange {
                    action,
                    row: row_idx,
                    col,
                    value,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(ModelError::RowSum {
                action,
                row: row_idx,
                sum,
            });
        }
    }
    Ok(())
}

fn marginal(row: &[f64; PwdState::COUNT], pred: impl Fn(PwdState) -> bool) -> f64 {
    row.iter()
        .enumerate()
        .filter(|(i, _)| pred(PwdState::from_index(*i)))
        .map(|(_, p)| p)
        .sum()
}

fn marginal_rr(row: &[f64; PwdState::COUNT]) -> f64 {
    marginal(row, |s| s.response == ResponseRelevance::Relevant)
}

fn marginal_responds(row: &[f64; PwdState::COUNT]) -> f64 {
    marginal(row, |s| s.response != ResponseRelevance::NoResponse)
}

fn marginal_pos(row: &[f64; PwdState::COUNT]) -> f64 {
    marginal(row, |s| s.emotion == EmotionLevel::Positive)
}

fn marginal_neg(row: &[f64; PwdState::COUNT]) -> f64 {
    marginal(row, |s| s.emotion == EmotionLevel::Negative)
}

fn marginal_confused(row: &[f64; PwdState::COUNT]) -> f64 {
    marginal(row, |s| s.confusion == Confusion::Yes)
}

/// Identifier of a validated constraint family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintId {
    Structural,
    C1Difficulty,
    C2BadMoment,
    C3Repair,
    C4Comfort,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConstraintId::Structural => "structural",
            ConstraintId::C1Difficulty => "C1",
            ConstraintId::C2BadMoment => "C2",
            ConstraintId::C3Repair => "C3",
            ConstraintId::C4Comfort => "C4",
        };
        f.write_str(name)
    }
}

/// One evaluated check.
#[derive(Debug, Clone)]
pub struct ConstraintFinding {
    pub constraint: ConstraintId,
    pub actions: Vec<RobotAction>,
    pub states: Vec<PwdState>,
    pub satisfied: bool,
    pub detail: String,
}

impl fmt::Display for ConstraintFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.satisfied { "ok" } else { "VIOLATED" };
        write!(f, "[{}] {}: {}", self.constraint, verdict, self.detail)
    }
}

/// Deterministic list of every evaluated check.
#[derive(Debug, Clone)]
pub struct ModelConstraintReport {
    findings: Vec<ConstraintFinding>,
}

impl ModelConstraintReport {
    pub fn findings(&self) -> &[ConstraintFinding] {
        &self.findings
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintFinding> {
        self.findings.iter().filter(|f| !f.satisfied)
    }

    pub fn violation_count(&self) -> usize {
        self.violations().count()
    }

    pub fn is_valid(&self) -> bool {
        self.violation_count() == 0
    }

    pub fn has_structural_errors(&self) -> bool {
        self.violations()
            .any(|f| f.constraint == ConstraintId::Structural)
    }
}

// ---------------------------------------------------------------------------
// Default generator
// ---------------------------------------------------------------------------

/// Knobs of the default generator. Every number is an artifact default with
/// no clinical provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Probability that repeating/explaining clears an existing confusion.
    pub confusion_clear: f64,
    /// Relative jitter applied to the baseline profile per seed.
    pub jitter: f64,
    /// Multiplier on the relevant-response mass of prompts in a bad moment.
    pub rr_penalty_bad: f64,
    /// Same, when the patient is both negative and confused.
    pub rr_penalty_double_bad: f64,
    pub choice_stop: f64,
    pub choice_continue: f64,
    pub choice_change: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            confusion_clear: 0.6,
            jitter: 0.02,
            rr_penalty_bad: 0.45,
            rr_penalty_double_bad: 0.30,
            choice_stop: 0.2,
            choice_continue: 0.4,
            choice_change: 0.4,
        }
    }
}

// Baseline factor profiles per action (a1..a6). Next-state distributions are
// products of independent response/emotion/confusion factors, so each row is
// stochastic by construction and the qualitative orderings reduce to the
// orderings of these tables.
const RESPONSE_BASE: [[f64; 3]; 6] = [
    // NR, IR, RR
    [0.15, 0.25, 0.60], // a1
    [0.25, 0.30, 0.45], // a2
    [0.35, 0.33, 0.32], // a3
    [0.20, 0.35, 0.45], // a4
    [0.18, 0.34, 0.48], // a5
    [0.22, 0.38, 0.40], // a6
];

const EMOTION_BASE: [[f64; 3]; 6] = [
    // Neg, Neu, Pos
    [0.10, 0.55, 0.35], // a1
    [0.15, 0.55, 0.30], // a2
    [0.20, 0.55, 0.25], // a3
    [0.12, 0.58, 0.30], // a4
    [0.12, 0.56, 0.32], // a5
    [0.06, 0.52, 0.42], // a6 (in a good moment; see EMOTION_COMFORT_BAD)
];

// Comforting mainly helps a patient who is actually distressed; toward a
// content patient its effect is mild (the row above).
const EMOTION_COMFORT_NEGATIVE: [f64; 3] = [0.02, 0.36, 0.62];

const CONFUSION_BASE_CLEAR: [[f64; 2]; 6] = [
    // No, Yes — current state unconfused
    [0.92, 0.08], // a1
    [0.85, 0.15], // a2
    [0.78, 0.22], // a3
    [0.90, 0.10], // a4
    [0.90, 0.10], // a5
    [0.88, 0.12], // a6
];

const CONFUSION_BASE_CONFUSED: [[f64; 2]; 6] = [
    // No, Yes — current state confused; a4/a5 replaced by the clear knob
    [0.25, 0.75], // a1
    [0.20, 0.80], // a2
    [0.15, 0.85], // a3
    [0.60, 0.40], // a4 (overridden by confusion_clear)
    [0.60, 0.40], // a5 (overridden by confusion_clear)
    [0.30, 0.70], // a6
];

/// Generate the default model for a seed. Deterministic per seed; all matrix
/// entries strictly positive so no state is a trap. The same matrices apply
/// to every memory trigger.
pub fn default_model(seed: u64) -> TransitionModel {
    generate_model(seed, &GeneratorParams::default())
}

/// Generate a model from explicit generator knobs.
pub fn generate_model(seed: u64, params: &GeneratorParams) -> TransitionModel {
    let mut rng = crate::rng::stream(seed, crate::rng::purpose::MODEL, 0);
    let jitter = |rng: &mut Stream| 1.0 - params.jitter + 2.0 * params.jitter * rng.random::<f64>();

    let mut matrices = [[[0.0; PwdState::COUNT]; PwdState::COUNT]; 6];

    for current in PwdState::all() {
        // One jitter per factor entry, shared by all actions in this state so
        // cross-action orderings are preserved exactly.
        let j_resp = [jitter(&mut rng), jitter(&mut rng), jitter(&mut rng)];
        let j_emo = [jitter(&mut rng), jitter(&mut rng), jitter(&mut rng)];
        let j_conf = [jitter(&mut rng), jitter(&mut rng)];

        let negative = current.emotion == EmotionLevel::Negative;
        let confused = current.confusion == Confusion::Yes;

        for (ai, action) in RobotAction::LEARNABLE.into_iter().enumerate() {
            let mut resp = RESPONSE_BASE[ai];
            for (v, j) in resp.iter_mut().zip(j_resp) {
                *v *= j;
            }
            if action.is_prompt() && (negative || confused) {
                resp[2] *= if negative && confused {
                    params.rr_penalty_double_bad
                } else {
                    params.rr_penalty_bad
                };
            }
            normalize(&mut resp);

            let mut emo = if action == RobotAction::Comfort && negative {
                EMOTION_COMFORT_NEGATIVE
            } else {
                EMOTION_BASE[ai]
            };
            for (v, j) in emo.iter_mut().zip(j_emo) {
                *v *= j;
            }
            // Emotion inertia of the current mood; prompting does little to
            // lift a negative mood, so prompts carry an extra penalty there.
            if negative {
                emo[0] *= 2.2;
                emo[2] *= 0.5;
                if action.is_prompt() {
                    emo[0] *= 1.3;
                }
            } else if current.emotion == EmotionLevel::Positive {
                emo[0] *= 0.7;
                emo[2] *= 1.3;
            }
            normalize(&mut emo);

            let mut conf = if confused {
                match action {
                    RobotAction::Repeat | RobotAction::Explain => {
                        [params.confusion_clear, 1.0 - params.confusion_clear]
                    }
                    _ => CONFUSION_BASE_CONFUSED[ai],
                }
            } else {
                CONFUSION_BASE_CLEAR[ai]
            };
            for (v, j) in conf.iter_mut().zip(j_conf) {
                *v *= j;
            }
            normalize(&mut conf);

            let row = &mut matrices[ai][current.index()];
            for next in PwdState::all() {
                row[next.index()] = resp[next.response.ordinal()]
                    * emo[next.emotion.ordinal()]
                    * conf[next.confusion.ordinal()];
            }
        }
    }

    let choice = ChoiceDistribution::new(
        params.choice_stop,
        params.choice_continue,
        params.choice_change,
    )
    .expect("generator choice parameters must form a distribution");

    let metadata = ModelMetadata {
        label: format!("default-model seed={seed}"),
        provenance: "synthetic baseline generator; configurable artifact defaults, \
                     not estimates from patient data"
            .to_string(),
    };

    TransitionModel::new(matrices, choice, metadata)
        .expect("generated rows are stochastic by construction")
}

fn normalize(values: &mut [f64]) {
    let sum: f64 = values.iter().sum();
    for v in values.iter_mut() {
        *v /= sum;
    }
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelFile {
    actions: BTreeMap<String, Vec<Vec<f64>>>,
    choice: ChoiceFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choice_by_state: Option<Vec<ChoiceFile>>,
    #[serde(default)]
    metadata: ModelMetadata,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct ChoiceFile {
    stop: f64,
    #[serde(rename = "continue")]
    cont: f64,
    change: f64,
}

impl From<&ChoiceDistribution> for ChoiceFile {
    fn from(c: &ChoiceDistribution) -> Self {
        ChoiceFile {
            stop: c.prob(PwdChoice::Stop),
            cont: c.prob(PwdChoice::Continue),
            change: c.prob(PwdChoice::ChangeTrigger),
        }
    }
}

impl ChoiceFile {
    fn into_distribution(self) -> Result<ChoiceDistribution, ModelError> {
        ChoiceDistribution::new(self.stop, self.cont, self.change)
    }
}

impl ModelFile {
    fn from_model(model: &TransitionModel) -> Self {
        let mut actions = BTreeMap::new();
        for action in RobotAction::LEARNABLE {
            let matrix = model.matrix(action);
            let rows: Vec<Vec<f64>> = matrix.iter().map(|row| row.to_vec()).collect();
            actions.insert(action.label().to_string(), rows);
        }
        ModelFile {
            actions,
            choice: ChoiceFile::from(&model.choice),
            choice_by_state: model.choice_by_state.as_ref().map(|per_state| {
                per_state.iter().map(ChoiceFile::from).collect()
            }),
            metadata: model.metadata.clone(),
        }
    }

    fn into_model(self) -> Result<TransitionModel, ModelError> {
        let mut matrices = [[[0.0; PwdState::COUNT]; PwdState::COUNT]; 6];
        for action in RobotAction::LEARNABLE {
            let rows = self.actions.get(action.label()).ok_or_else(|| {
                ModelError::Schema(format!("missing matrix for action {action}"))
            })?;
            if rows.len() != PwdState::COUNT {
                return Err(ModelError::Schema(format!(
                    "action {action} has {} rows, expected {}",
                    rows.len(),
                    PwdState::COUNT
                )));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != PwdState::COUNT {
                    return Err(ModelError::Schema(format!(
                        "action {action} row {i} has {} entries, expected {}",
                        row.len(),
                        PwdState::COUNT
                    )));
                }
                matrices[action.index()][i].copy_from_slice(row);
            }
        }
        for key in self.actions.keys() {
            if RobotAction::from_label(key).map_or(true, |a| !a.is_learnable()) {
                return Err(ModelError::Schema(format!("unknown action key {key:?}")));
            }
        }

        let choice = self.choice.into_distribution()?;
        let mut model = TransitionModel::new(matrices, choice, self.metadata)?;

        if let Some(entries) = self.choice_by_state {
            if entries.len() != PwdState::COUNT {
                return Err(ModelError::Schema(format!(
                    "choice_by_state has {} entries, expected {}",
                    entries.len(),
                    PwdState::COUNT
                )));
            }
            let mut per_state = [model.choice; PwdState::COUNT];
            for (i, entry) in entries.into_iter().enumerate() {
                per_state[i] = entry.into_distribution()?;
            }
            model = model.with_choice_by_state(per_state);
        }
        Ok(model)
    }
}
