//! State, action and reward vocabulary of the reminiscence-therapy MDP.
//!
//! The patient state is the triple (response relevance, emotion level,
//! confusion), giving 3 x 3 x 2 = 18 states. The robot has seven actions;
//! only `a1`-`a6` are learnable, `a7` (giving the patient choices) is
//! rule-triggered.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Relevance of the patient's reply to the last prompt.
///
/// Trace files encode the variants as 0, 1, 2 in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResponseRelevance {
    NoResponse,
    Irrelevant,
    Relevant,
}

impl ResponseRelevance {
    pub const ALL: [ResponseRelevance; 3] = [
        ResponseRelevance::NoResponse,
        ResponseRelevance::Irrelevant,
        ResponseRelevance::Relevant,
    ];

    /// Integer code used in trace files: NR=0, IR=1, RR=2.
    pub fn code(self) -> i8 {
        self as i8
    }

    pub(crate) fn ordinal(self) -> usize {
        self as usize
    }
}

/// Emotion level shown by the patient.
///
/// Trace files encode the variants as -1, 0, +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EmotionLevel {
    Negative,
    Neutral,
    Positive,
}

impl EmotionLevel {
    pub const ALL: [EmotionLevel; 3] = [
        EmotionLevel::Negative,
        EmotionLevel::Neutral,
        EmotionLevel::Positive,
    ];

    /// Integer code used in trace files: Neg=-1, Neu=0, Pos=+1.
    pub fn code(self) -> i8 {
        self as i8 - 1
    }

    pub(crate) fn ordinal(self) -> usize {
        self as usize
    }
}

/// Whether the patient is confused by the current prompt or trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confusion {
    No,
    Yes,
}

impl Confusion {
    pub const ALL: [Confusion; 2] = [Confusion::No, Confusion::Yes];

    /// Integer code used in trace files: No=0, Yes=1.
    pub fn code(self) -> i8 {
        self as i8
    }

    pub(crate) fn ordinal(self) -> usize {
        self as usize
    }
}

/// One of the 18 patient states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PwdState {
    pub response: ResponseRelevance,
    pub emotion: EmotionLevel,
    pub confusion: Confusion,
}

impl PwdState {
    /// Number of distinct states.
    pub const COUNT: usize = 18;

    /// The session start state: no response, neutral emotion, unconfused.
    pub const INITIAL: PwdState = PwdState {
        response: ResponseRelevance::NoResponse,
        emotion: EmotionLevel::Neutral,
        confusion: Confusion::No,
    };

    pub fn new(response: ResponseRelevance, emotion: EmotionLevel, confusion: Confusion) -> Self {
        PwdState {
            response,
            emotion,
            confusion,
        }
    }

    /// Canonical index in `[0, 18)`: response-major, then emotion, then
    /// confusion. The ordering is fixed so Q-tables and traces are
    /// byte-comparable across runs.
    pub fn index(self) -> usize {
        self.response.ordinal() * 6 + self.emotion.ordinal() * 2 + self.confusion.ordinal()
    }

    /// Inverse of [`PwdState::index`]. Panics if `index >= 18`.
    pub fn from_index(index: usize) -> Self {
        assert!(index < Self::COUNT, "state index {index} out of range");
        PwdState {
            response: ResponseRelevance::ALL[index / 6],
            emotion: EmotionLevel::ALL[(index / 2) % 3],
            confusion: Confusion::ALL[index % 2],
        }
    }

    /// All 18 states in canonical index order.
    pub fn all() -> impl Iterator<Item = PwdState> {
        (0..Self::COUNT).map(Self::from_index)
    }

    /// Integer triple used by trace files, e.g. `[2, -1, 0]`.
    pub fn trace_code(self) -> [i8; 3] {
        [
            self.response.code(),
            self.emotion.code(),
            self.confusion.code(),
        ]
    }

    /// Parse an integer triple in trace coding.
    pub fn from_trace_code(code: [i8; 3]) -> Option<Self> {
        let response = ResponseRelevance::ALL.into_iter().find(|r| r.code() == code[0])?;
        let emotion = EmotionLevel::ALL.into_iter().find(|e| e.code() == code[1])?;
        let confusion = Confusion::ALL.into_iter().find(|c| c.code() == code[2])?;
        Some(PwdState::new(response, emotion, confusion))
    }

    /// A "bad moment": negative emotion or confusion.
    pub fn is_bad(self) -> bool {
        self.emotion == EmotionLevel::Negative || self.confusion == Confusion::Yes
    }
}

impl fmt::Display for PwdState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, e, c] = self.trace_code();
        write!(f, "[{r}, {e}, {c}]")
    }
}

/// The robot's actions. `a1`-`a3` are prompts of increasing difficulty,
/// `a4`/`a5` repeat or explain the prompt, `a6` comforts, and `a7` offers
/// the patient the choice to stop, continue or change the memory trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RobotAction {
    EasyPrompt,
    ModeratePrompt,
    DifficultPrompt,
    Repeat,
    Explain,
    Comfort,
    GiveChoices,
}

impl RobotAction {
    pub const ALL: [RobotAction; 7] = [
        RobotAction::EasyPrompt,
        RobotAction::ModeratePrompt,
        RobotAction::DifficultPrompt,
        RobotAction::Repeat,
        RobotAction::Explain,
        RobotAction::Comfort,
        RobotAction::GiveChoices,
    ];

    /// The actions a learned policy may select. `GiveChoices` is
    /// rule-triggered and never part of the learnable set.
    pub const LEARNABLE: [RobotAction; 6] = [
        RobotAction::EasyPrompt,
        RobotAction::ModeratePrompt,
        RobotAction::DifficultPrompt,
        RobotAction::Repeat,
        RobotAction::Explain,
        RobotAction::Comfort,
    ];

    /// Zero-based index used by trace files and Q-tables (a1=0 .. a7=6).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Short label: "a1" .. "a7".
    pub fn label(self) -> &'static str {
        ["a1", "a2", "a3", "a4", "a5", "a6", "a7"][self.index()]
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.label() == label)
    }

    pub fn is_learnable(self) -> bool {
        self != RobotAction::GiveChoices
    }

    pub fn is_prompt(self) -> bool {
        matches!(
            self,
            RobotAction::EasyPrompt | RobotAction::ModeratePrompt | RobotAction::DifficultPrompt
        )
    }
}

impl fmt::Display for RobotAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of the choice prompt (`a7`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PwdChoice {
    Stop,
    Continue,
    #[serde(rename = "change")]
    ChangeTrigger,
}

impl PwdChoice {
    pub const ALL: [PwdChoice; 3] = [PwdChoice::Stop, PwdChoice::Continue, PwdChoice::ChangeTrigger];

    pub(crate) fn ordinal(self) -> usize {
        self as usize
    }

    /// Label used in trace and model files.
    pub fn label(self) -> &'static str {
        ["stop", "continue", "change"][self.ordinal()]
    }
}

impl fmt::Display for PwdChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which preset a [`RewardSpec`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardVariant {
    R1,
    R2,
    Custom,
}

impl fmt::Display for RewardVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardVariant::R1 => f.write_str("R1"),
            RewardVariant::R2 => f.write_str("R2"),
            RewardVariant::Custom => f.write_str("Custom"),
        }
    }
}

/// Additive reward specification.
///
/// The reward of a step is the sum of a response component (selected by the
/// action's row: `a2` and `a3` have dedicated rows, every other action uses
/// the generic row), an emotion component and a confusion component, all
/// evaluated on the state the patient ends the step in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    /// Response row for `a2`, indexed by [`ResponseRelevance`] (NR, IR, RR).
    a2_row: [f64; 3],
    /// Response row for `a3`.
    a3_row: [f64; 3],
    /// Response row for every other action, including `a7`.
    generic_row: [f64; 3],
    /// Emotion component, indexed by [`EmotionLevel`] (Neg, Neu, Pos).
    emotion: [f64; 3],
    /// Confusion component, indexed by [`Confusion`] (No, Yes).
    confusion: [f64; 2],
    variant: RewardVariant,
}

impl RewardSpec {
    const DEFAULT_EMOTION: [f64; 3] = [-3.0, 1.0, 2.0];
    const DEFAULT_CONFUSION: [f64; 2] = [2.0, -2.5];

    /// The conservative preset: moderate bonus for relevant answers to
    /// difficult prompts.
    pub fn r1() -> Self {
        RewardSpec {
            a2_row: [-2.0, 0.75, 2.0],
            a3_row: [-2.0, 1.75, 3.0],
            generic_row: [-2.0, 0.3, 0.75],
            emotion: Self::DEFAULT_EMOTION,
            confusion: Self::DEFAULT_CONFUSION,
            variant: RewardVariant::R1,
        }
    }

    /// The aggressive preset: relevant answers to difficult prompts are
    /// valued far above mood upkeep.
    pub fn r2() -> Self {
        RewardSpec {
            a3_row: [-2.0, 3.0, 10.0],
            variant: RewardVariant::R2,
            ..Self::r1()
        }
    }

    pub fn preset(variant: RewardVariant) -> Self {
        match variant {
            RewardVariant::R1 => Self::r1(),
            RewardVariant::R2 => Self::r2(),
            RewardVariant::Custom => panic!("Custom is not a preset; use RewardSpec::custom"),
        }
    }

    pub fn custom(
        a2_row: [f64; 3],
        a3_row: [f64; 3],
        generic_row: [f64; 3],
        emotion: [f64; 3],
        confusion: [f64; 2],
    ) -> Self {
        RewardSpec {
            a2_row,
            a3_row,
            generic_row,
            emotion,
            confusion,
            variant: RewardVariant::Custom,
        }
    }

    pub fn variant(&self) -> RewardVariant {
        self.variant
    }

    /// The response component of `action`'s row for a given relevance.
    pub fn response_component(&self, action: RobotAction, response: ResponseRelevance) -> f64 {
        let row = match action {
            RobotAction::ModeratePrompt => &self.a2_row,
            RobotAction::DifficultPrompt => &self.a3_row,
            _ => &self.generic_row,
        };
        row[response.ordinal()]
    }

    pub fn emotion_component(&self, emotion: EmotionLevel) -> f64 {
        self.emotion[emotion.ordinal()]
    }

    pub fn confusion_component(&self, confusion: Confusion) -> f64 {
        self.confusion[confusion.ordinal()]
    }

    /// Reward observed after `action` leaves the patient in `next`.
    pub fn reward(&self, next: PwdState, action: RobotAction) -> f64 {
        self.response_component(action, next.response)
            + self.emotion_component(next.emotion)
            + self.confusion_component(next.confusion)
    }
}
