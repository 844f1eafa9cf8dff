//! C ABI for the reminisce toolkit.
//!
//! Handles are opaque pointers created and freed here; every fallible call
//! returns a [`RemStatus`] and writes its result through an out pointer.
//! States are canonical indices in `[0, 18)`, actions zero-based indices
//! (`0..=5` learnable, `6` the rule-triggered choice prompt).

use std::ffi::{CStr, CString};
use std::os::raw::c_char;

use reminisce::domain::{PwdChoice, PwdState, RewardSpec, RewardVariant, RobotAction};
use reminisce::evaluation::exact_policy_value;
use reminisce::patient::{default_model, ModelError, TransitionModel};
use reminisce::qlearning::{train, PolicyTable, QTable, TrainConfig};
use reminisce::rng::{self, Stream};
use reminisce::session::{DoneReason, Session, SessionConfig, SessionError};

pub const REM_STATE_COUNT: u32 = 18;
pub const REM_LEARNABLE_ACTION_COUNT: u32 = 6;
/// Action index of the rule-triggered choice prompt.
pub const REM_ACTION_GIVE_CHOICES: u32 = 6;

/// Status code of every fallible call. Zero is success, negative is failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidArgument = -2,
    Io = -3,
    Parse = -4,
    Validation = -5,
    SessionFinished = -6,
    ForcedChoiceRequired = -7,
    ChoiceNotForced = -8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemRewardVariant {
    R1 = 0,
    R2 = 1,
}

impl From<RemRewardVariant> for RewardVariant {
    fn from(v: RemRewardVariant) -> Self {
        match v {
            RemRewardVariant::R1 => RewardVariant::R1,
            RemRewardVariant::R2 => RewardVariant::R2,
        }
    }
}

/// Opaque patient model handle.
pub struct RemModel {
    inner: TransitionModel,
}

/// Opaque action-value table handle.
pub struct RemQTable {
    inner: QTable,
}

/// Opaque session handle; owns its model copy, reward tables and RNG stream.
pub struct RemSession {
    model: TransitionModel,
    spec: RewardSpec,
    config: SessionConfig,
    session: Session,
    rng: Stream,
}

/// Training schedule and hyper-parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RemTrainConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epochs: u32,
    pub episodes_per_epoch: u32,
    pub seed: u64,
    pub reward_variant: RemRewardVariant,
    pub max_rounds: u32,
    pub max_triggers: u32,
}

/// Session construction options.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RemSessionOptions {
    pub reward_variant: RemRewardVariant,
    pub seed: u64,
    pub max_rounds: u32,
    pub max_triggers: u32,
}

/// Result of one session step.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RemStepOutcome {
    /// Canonical index of the state after the step.
    pub next_state: u32,
    /// The same state as its integer triple (response, emotion, confusion).
    pub state_code: [i8; 3],
    pub reward: f64,
    pub done: bool,
    /// -1 none, 0 stop, 1 continue, 2 change trigger.
    pub choice: i32,
    /// -1 running, 0 stop chosen, 1 round cap, 2 trigger cap.
    pub done_reason: i32,
    pub round: u32,
    pub triggers_discussed: u32,
    pub bad_streak: u32,
}

fn model_status(error: &ModelError) -> RemStatus {
    match error {
        ModelError::Io(_) => RemStatus::Io,
        ModelError::Json(_) => RemStatus::Parse,
        _ => RemStatus::Validation,
    }
}

fn done_reason_code(reason: Option<DoneReason>) -> i32 {
    match reason {
        None => -1,
        Some(DoneReason::StopChosen) => 0,
        Some(DoneReason::MaxRounds) => 1,
        Some(DoneReason::MaxTriggers) => 2,
    }
}

fn choice_code(choice: Option<PwdChoice>) -> i32 {
    match choice {
        None => -1,
        Some(PwdChoice::Stop) => 0,
        Some(PwdChoice::Continue) => 1,
        Some(PwdChoice::ChangeTrigger) => 2,
    }
}

/// Defaults matching the toolkit's training preset.
#[no_mangle]
pub extern "C" fn rem_train_config_default() -> RemTrainConfig {
    let d = TrainConfig::default();
    RemTrainConfig {
        alpha: d.alpha,
        gamma: d.gamma,
        epsilon: d.epsilon,
        epochs: d.epochs,
        episodes_per_epoch: d.episodes_per_epoch,
        seed: d.seed,
        reward_variant: RemRewardVariant::R1,
        max_rounds: d.session.max_rounds,
        max_triggers: d.session.max_triggers,
    }
}

/// Defaults for a standalone session.
#[no_mangle]
pub extern "C" fn rem_session_options_default() -> RemSessionOptions {
    let d = SessionConfig::default();
    RemSessionOptions {
        reward_variant: RemRewardVariant::R1,
        seed: 0,
        max_rounds: d.max_rounds,
        max_triggers: d.max_triggers,
    }
}

/// Generate the bundled default model for a seed.
///
/// # Safety
/// `out` must be a valid pointer. On success it receives a handle that must
/// be released with [`rem_model_free`].
#[no_mangle]
pub unsafe extern "C" fn rem_model_default(seed: u64, out: *mut *mut RemModel) -> RemStatus {
    if out.is_null() {
        return RemStatus::NullPointer;
    }
    let model = default_model(seed);
    *out = Box::into_raw(Box::new(RemModel { inner: model }));
    RemStatus::Ok
}

/// Parse a model document (the same JSON schema the CLI uses).
///
/// # Safety
/// `json` must be a NUL-terminated UTF-8 string; `out` must be valid. On
/// success the handle must be released with [`rem_model_free`].
#[no_mangle]
pub unsafe extern "C" fn rem_model_from_json(
    json: *const c_char,
    out: *mut *mut RemModel,
) -> RemStatus {
    if json.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    let Ok(text) = CStr::from_ptr(json).to_str() else {
        return RemStatus::Parse;
    };
    match TransitionModel::from_json_str(text) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(RemModel { inner: model }));
            RemStatus::Ok
        }
        Err(e) => model_status(&e),
    }
}

/// Serialize a model to its JSON document.
///
/// # Safety
/// `model` must be a live handle from this library; `out` must be valid. The
/// returned string must be released with [`rem_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rem_model_to_json(
    model: *const RemModel,
    out: *mut *mut c_char,
) -> RemStatus {
    if model.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    let json = (*model).inner.to_json_string();
    match CString::new(json) {
        Ok(s) => {
            *out = s.into_raw();
            RemStatus::Ok
        }
        Err(_) => RemStatus::Parse,
    }
}

/// Run the structural and behavioral checks; writes the violation count.
///
/// # Safety
/// `model` must be a live handle; `violations` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rem_model_validate(
    model: *const RemModel,
    violations: *mut u32,
) -> RemStatus {
    if model.is_null() || violations.is_null() {
        return RemStatus::NullPointer;
    }
    let report = (*model).inner.validate();
    *violations = report.violation_count() as u32;
    RemStatus::Ok
}

/// # Safety
/// `model` must be a handle from this library, not yet freed. `NULL` is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn rem_model_free(model: *mut RemModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be a string returned by this library, not yet freed. `NULL` is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn rem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Run the full training schedule against a model.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid. On success the handle
/// must be released with [`rem_qtable_free`].
#[no_mangle]
pub unsafe extern "C" fn rem_train(
    model: *const RemModel,
    config: RemTrainConfig,
    out: *mut *mut RemQTable,
) -> RemStatus {
    if model.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    let variant = RewardVariant::from(config.reward_variant);
    let train_config = TrainConfig {
        alpha: config.alpha,
        gamma: config.gamma,
        epsilon: config.epsilon,
        epochs: config.epochs,
        episodes_per_epoch: config.episodes_per_epoch,
        seed: config.seed,
        reward_variant: variant,
        session: SessionConfig {
            max_rounds: config.max_rounds,
            max_triggers: config.max_triggers,
        },
        ..TrainConfig::default()
    };
    let spec = RewardSpec::preset(variant);
    match train(&train_config, &(*model).inner, &spec) {
        Ok((q, _log)) => {
            *out = Box::into_raw(Box::new(RemQTable { inner: q }));
            RemStatus::Ok
        }
        Err(_) => RemStatus::InvalidArgument,
    }
}

/// Read one action value.
///
/// # Safety
/// `q` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rem_qtable_value(
    q: *const RemQTable,
    state: u32,
    action: u32,
    out: *mut f64,
) -> RemStatus {
    if q.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    if state >= REM_STATE_COUNT || action >= REM_LEARNABLE_ACTION_COUNT {
        return RemStatus::InvalidArgument;
    }
    let s = PwdState::from_index(state as usize);
    let a = RobotAction::from_index(action as usize).expect("checked above");
    *out = (*q).inner.get(s, a);
    RemStatus::Ok
}

/// Greedy action for a state (ties to the lowest action index).
///
/// # Safety
/// `q` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rem_qtable_greedy_action(
    q: *const RemQTable,
    state: u32,
    out: *mut u32,
) -> RemStatus {
    if q.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    if state >= REM_STATE_COUNT {
        return RemStatus::InvalidArgument;
    }
    let s = PwdState::from_index(state as usize);
    *out = (*q).inner.greedy_action(s).index() as u32;
    RemStatus::Ok
}

/// Serialize a table to the `qtable.json` document.
///
/// # Safety
/// `q` must be a live handle; `out` must be valid. Release the string with
/// [`rem_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rem_qtable_to_json(
    q: *const RemQTable,
    out: *mut *mut c_char,
) -> RemStatus {
    if q.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    let doc = reminisce::artifacts::qtable_json_string(&(*q).inner);
    match CString::new(doc) {
        Ok(s) => {
            *out = s.into_raw();
            RemStatus::Ok
        }
        Err(_) => RemStatus::Parse,
    }
}

/// # Safety
/// `q` must be a handle from this library, not yet freed. `NULL` is a no-op.
#[no_mangle]
pub unsafe extern "C" fn rem_qtable_free(q: *mut RemQTable) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Start a session against a copy of the model.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid. Release with
/// [`rem_session_free`].
#[no_mangle]
pub unsafe extern "C" fn rem_session_new(
    model: *const RemModel,
    options: RemSessionOptions,
    out: *mut *mut RemSession,
) -> RemStatus {
    if model.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    let config = SessionConfig {
        max_rounds: options.max_rounds,
        max_triggers: options.max_triggers,
    };
    let session = RemSession {
        model: (*model).inner.clone(),
        spec: RewardSpec::preset(options.reward_variant.into()),
        config,
        session: Session::new(config),
        rng: rng::stream(options.seed, "ffi/session", 0),
    };
    *out = Box::into_raw(Box::new(session));
    RemStatus::Ok
}

/// Restart the session from the initial state. The RNG stream continues.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rem_session_reset(session: *mut RemSession) -> RemStatus {
    if session.is_null() {
        return RemStatus::NullPointer;
    }
    let s = &mut *session;
    s.session = Session::new(s.config);
    RemStatus::Ok
}

/// Canonical index of the current state.
///
/// # Safety
/// `session` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rem_session_current(
    session: *const RemSession,
    out: *mut u32,
) -> RemStatus {
    if session.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    *out = (*session).session.current().index() as u32;
    RemStatus::Ok
}

/// Whether the next action must be the choice prompt (index 6).
///
/// # Safety
/// `session` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rem_session_forced_choice_required(
    session: *const RemSession,
    out: *mut bool,
) -> RemStatus {
    if session.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    *out = (*session).session.forced_action_required();
    RemStatus::Ok
}

/// Whether the session has ended.
///
/// # Safety
/// `session` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rem_session_done(
    session: *const RemSession,
    out: *mut bool,
) -> RemStatus {
    if session.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    *out = (*session).session.done();
    RemStatus::Ok
}

/// Take one action (0..=5 learnable, 6 the choice prompt when forced).
///
/// # Safety
/// `session` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rem_session_step(
    session: *mut RemSession,
    action: u32,
    out: *mut RemStepOutcome,
) -> RemStatus {
    if session.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    let Some(action) = RobotAction::from_index(action as usize) else {
        return RemStatus::InvalidArgument;
    };
    let s = &mut *session;
    match s.session.step(action, &s.model, &s.spec, &mut s.rng) {
        Ok(outcome) => {
            *out = RemStepOutcome {
                next_state: outcome.next_state.index() as u32,
                state_code: outcome.next_state.trace_code(),
                reward: outcome.reward,
                done: outcome.done,
                choice: choice_code(outcome.forced_choice_taken),
                done_reason: done_reason_code(s.session.done_reason()),
                round: outcome.info.round,
                triggers_discussed: outcome.info.triggers_discussed,
                bad_streak: outcome.info.bad_streak,
            };
            RemStatus::Ok
        }
        Err(SessionError::EpisodeFinished) => RemStatus::SessionFinished,
        Err(SessionError::ForcedChoiceRequired { .. }) => RemStatus::ForcedChoiceRequired,
        Err(SessionError::ChoiceNotForced) => RemStatus::ChoiceNotForced,
    }
}

/// # Safety
/// `session` must be a handle from this library, not yet freed. `NULL` is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn rem_session_free(session: *mut RemSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Exact expected undiscounted return of a fixed policy (18 learnable
/// action indices in canonical state order).
///
/// # Safety
/// `model` must be a live handle; `actions` must point to 18 readable
/// `uint32_t`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rem_exact_policy_value(
    model: *const RemModel,
    actions: *const u32,
    variant: RemRewardVariant,
    max_rounds: u32,
    max_triggers: u32,
    out: *mut f64,
) -> RemStatus {
    if model.is_null() || actions.is_null() || out.is_null() {
        return RemStatus::NullPointer;
    }
    let indices = std::slice::from_raw_parts(actions, PwdState::COUNT);
    let mut table = [RobotAction::EasyPrompt; PwdState::COUNT];
    for (i, &idx) in indices.iter().enumerate() {
        match RobotAction::from_index(idx as usize) {
            Some(a) if a.is_learnable() => table[i] = a,
            _ => return RemStatus::InvalidArgument,
        }
    }
    let policy = PolicyTable::from_actions(table);
    let spec = RewardSpec::preset(variant.into());
    let session_cfg = SessionConfig {
        max_rounds,
        max_triggers,
    };
    *out = exact_policy_value(&policy, &(*model).inner, &spec, session_cfg);
    RemStatus::Ok
}
