//! One reminiscence-therapy session as a step/reset environment.
//!
//! The session tracks the round counter, the number of memory triggers
//! discussed, and the bad-moment streak. Two consecutive bad moments
//! (negative emotion or confusion) force the choice prompt `a7`; the
//! patient's choice then stops the session, keeps the state, or resets it
//! to the start state with a fresh trigger.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{PwdChoice, PwdState, RewardSpec, RobotAction};
use crate::patient::TransitionModel;
use crate::rng::Stream;

/// Bad moments in a row that force the choice prompt.
pub const FORCED_STREAK: u32 = 2;

/// Episode caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub max_rounds: u32,
    pub max_triggers: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            max_rounds: 50,
            max_triggers: 15,
        }
    }
}

/// Why a session ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoneReason {
    StopChosen,
    MaxRounds,
    MaxTriggers,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("the session is already finished")]
    EpisodeFinished,
    #[error("two consecutive bad moments force {}, attempted {attempted}", RobotAction::GiveChoices)]
    ForcedChoiceRequired { attempted: RobotAction },
    #[error("{} is rule-triggered and only legal when forced", RobotAction::GiveChoices)]
    ChoiceNotForced,
}

/// Per-step bookkeeping snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    pub round: u32,
    pub triggers_discussed: u32,
    pub bad_streak: u32,
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: PwdState,
    pub reward: f64,
    pub done: bool,
    /// Set on `a7` steps: the choice the patient made.
    pub forced_choice_taken: Option<PwdChoice>,
    pub info: StepInfo,
}

/// Mutable state of one running session.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    config: SessionConfig,
    current: PwdState,
    previous: Option<PwdState>,
    round: u32,
    triggers_discussed: u32,
    bad_streak: u32,
    done: bool,
    done_reason: Option<DoneReason>,
}

impl Session {
    /// Start a fresh session: start state, round 0, first trigger under
    /// discussion. A zero cap produces a session that is born finished.
    pub fn new(config: SessionConfig) -> Self {
        let mut session = Session {
            config,
            current: PwdState::INITIAL,
            previous: None,
            round: 0,
            triggers_discussed: 1,
            bad_streak: 0,
            done: false,
            done_reason: None,
        };
        if session.round >= config.max_rounds {
            session.done = true;
            session.done_reason = Some(DoneReason::MaxRounds);
        } else if session.triggers_discussed >= config.max_triggers {
            session.done = true;
            session.done_reason = Some(DoneReason::MaxTriggers);
        }
        session
    }

    pub fn config(&self) -> SessionConfig {
        self.config
    }

    pub fn current(&self) -> PwdState {
        self.current
    }

    pub fn previous(&self) -> Option<PwdState> {
        self.previous
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn triggers_discussed(&self) -> u32 {
        self.triggers_discussed
    }

    pub fn bad_streak(&self) -> u32 {
        self.bad_streak
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn done_reason(&self) -> Option<DoneReason> {
        self.done_reason
    }

    /// True when the bad-moment streak has reached the threshold, making
    /// `a7` the only legal action.
    pub fn forced_action_required(&self) -> bool {
        self.bad_streak >= FORCED_STREAK
    }

    fn info(&self) -> StepInfo {
        StepInfo {
            round: self.round,
            triggers_discussed: self.triggers_discussed,
            bad_streak: self.bad_streak,
        }
    }

    /// Advance the session by one robot action.
    ///
    /// Learnable actions draw the next state from the model; `a7` draws the
    /// patient's choice instead. Rewards are always computed from the state
    /// the patient ends the step in (for `a7`: unchanged on stop/continue,
    /// the start state on a trigger change), with `a7` priced by the generic
    /// response row.
    pub fn step(
        &mut self,
        action: RobotAction,
        model: &TransitionModel,
        spec: &RewardSpec,
        rng: &mut Stream,
    ) -> Result<StepOutcome, SessionError> {
        if self.done {
            return Err(SessionError::EpisodeFinished);
        }
        if self.forced_action_required() {
            if action != RobotAction::GiveChoices {
                return Err(SessionError::ForcedChoiceRequired { attempted: action });
            }
        } else if action == RobotAction::GiveChoices {
            return Err(SessionError::ChoiceNotForced);
        }

        if action == RobotAction::GiveChoices {
            return Ok(self.step_choice(model, spec, rng));
        }

        let next = model.sample_transition(self.current, action, rng);
        let reward = spec.reward(next, action);
        self.previous = Some(self.current);
        self.current = next;
        self.round += 1;
        self.bad_streak = if next.is_bad() { self.bad_streak + 1 } else { 0 };
        if self.round >= self.config.max_rounds {
            self.done = true;
            self.done_reason = Some(DoneReason::MaxRounds);
        }

        Ok(StepOutcome {
            next_state: next,
            reward,
            done: self.done,
            forced_choice_taken: None,
            info: self.info(),
        })
    }

    fn step_choice(
        &mut self,
        model: &TransitionModel,
        spec: &RewardSpec,
        rng: &mut Stream,
    ) -> StepOutcome {
        let choice = model.sample_choice(self.current, rng);
        self.previous = Some(self.current);
        self.round += 1;
        // The streak resets regardless of the choice; otherwise a patient
        // choosing to continue from a bad state would re-trigger the prompt
        // on every following step.
        self.bad_streak = 0;

        let next = match choice {
            PwdChoice::Stop => {
                self.done = true;
                self.done_reason = Some(DoneReason::StopChosen);
                self.current
            }
            PwdChoice::Continue => self.current,
            PwdChoice::ChangeTrigger => {
                self.triggers_discussed += 1;
                self.current = PwdState::INITIAL;
                if self.triggers_discussed >= self.config.max_triggers {
                    self.done = true;
                    self.done_reason = Some(DoneReason::MaxTriggers);
                }
                self.current
            }
        };
        if !self.done && self.round >= self.config.max_rounds {
            self.done = true;
            self.done_reason = Some(DoneReason::MaxRounds);
        }

        StepOutcome {
            next_state: next,
            reward: spec.reward(next, RobotAction::GiveChoices),
            done: self.done,
            forced_choice_taken: Some(choice),
            info: self.info(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Confusion, EmotionLevel, ResponseRelevance};
    use crate::patient::{default_model, ChoiceDistribution};
    use crate::testutil::{mapping_model, st};
    use rand::RngCore;

    fn choice(stop: f64, cont: f64, change: f64) -> ChoiceDistribution {
        ChoiceDistribution::new(stop, cont, change).unwrap()
    }

    #[test]
    fn reset_postconditions() {
        let s = Session::new(SessionConfig::default());
        assert_eq!(s.current(), PwdState::INITIAL);
        assert_eq!(s.round(), 0);
        assert_eq!(s.triggers_discussed(), 1);
        assert_eq!(s.bad_streak(), 0);
        assert!(!s.done());
        assert_eq!(s.done_reason(), None);
        assert_eq!(s, Session::new(SessionConfig::default()));
    }

    #[test]
    fn zero_round_cap_is_born_finished() {
        let s = Session::new(SessionConfig {
            max_rounds: 0,
            max_triggers: 15,
        });
        assert!(s.done());
        assert_eq!(s.done_reason(), Some(DoneReason::MaxRounds));
    }

    #[test]
    fn two_consecutive_confused_states_force_the_choice() {
        // a1 walks INITIAL -> [0,1,1] -> [2,1,1]; both confused.
        let model = mapping_model(
            |s, _| match s.trace_code() {
                [0, 0, 0] => st([0, 1, 1]),
                [0, 1, 1] => st([2, 1, 1]),
                _ => st([2, 1, 1]),
            },
            choice(0.0, 0.0, 1.0),
        );
        let spec = RewardSpec::r1();
        let mut rng = crate::rng::stream(0, "test", 0);
        let mut s = Session::new(SessionConfig::default());

        s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
        assert_eq!(s.bad_streak(), 1);
        assert!(!s.forced_action_required());

        s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
        assert_eq!(s.bad_streak(), 2);
        assert!(s.forced_action_required());

        // Every learnable action is rejected while forced.
        for a in RobotAction::LEARNABLE {
            assert_eq!(
                s.step(a, &model, &spec, &mut rng),
                Err(SessionError::ForcedChoiceRequired { attempted: a })
            );
        }

        // The forced choice-change resets the state and counts a trigger.
        let out = s.step(RobotAction::GiveChoices, &model, &spec, &mut rng).unwrap();
        assert_eq!(out.forced_choice_taken, Some(PwdChoice::ChangeTrigger));
        assert_eq!(out.next_state, PwdState::INITIAL);
        assert_eq!(s.triggers_discussed(), 2);
        assert_eq!(s.bad_streak(), 0);
        assert_eq!(out.reward, 1.0); // generic NR -2, Neu +1, No +2
    }

    #[test]
    fn streak_resets_after_a_continue_choice() {
        let bad = st([0, -1, 0]);
        let model = mapping_model(|_, _| bad, choice(0.0, 1.0, 0.0));
        let spec = RewardSpec::r1();
        let mut rng = crate::rng::stream(0, "test", 0);
        let mut s = Session::new(SessionConfig::default());

        s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
        s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
        assert!(s.forced_action_required());

        let out = s.step(RobotAction::GiveChoices, &model, &spec, &mut rng).unwrap();
        assert_eq!(out.forced_choice_taken, Some(PwdChoice::Continue));
        assert_eq!(out.next_state, bad); // state unchanged
        assert_eq!(s.bad_streak(), 0);

        // One more bad state is a streak of one, not a forced step.
        s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
        assert_eq!(s.bad_streak(), 1);
        assert!(!s.forced_action_required());
    }

    #[test]
    fn stop_choice_terminates_with_reward_from_the_unchanged_state() {
        let bad = st([2, 1, 1]); // relevant, positive, confused
        let model = mapping_model(|_, _| bad, choice(1.0, 0.0, 0.0));
        let spec = RewardSpec::r1();
        let mut rng = crate::rng::stream(0, "test", 0);
        let mut s = Session::new(SessionConfig::default());

        s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
        s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
        let out = s.step(RobotAction::GiveChoices, &model, &spec, &mut rng).unwrap();
        assert_eq!(out.forced_choice_taken, Some(PwdChoice::Stop));
        assert!(out.done);
        assert_eq!(s.done_reason(), Some(DoneReason::StopChosen));
        assert_eq!(out.next_state, bad);
        assert_eq!(out.reward, 0.75 + 2.0 - 2.5); // generic RR, Pos, confused

        assert_eq!(
            s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng),
            Err(SessionError::EpisodeFinished)
        );
    }

    #[test]
    fn round_cap_terminates_the_session() {
        let good = st([2, 1, 0]);
        let model = mapping_model(|_, _| good, choice(0.2, 0.4, 0.4));
        let spec = RewardSpec::r1();
        let mut rng = crate::rng::stream(0, "test", 0);
        let mut s = Session::new(SessionConfig::default());

        for round in 1..=50 {
            let out = s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
            assert_eq!(out.info.round, round);
            assert_eq!(out.done, round == 50);
        }
        assert_eq!(s.done_reason(), Some(DoneReason::MaxRounds));
    }

    #[test]
    fn trigger_cap_terminates_the_session() {
        let bad = st([0, -1, 0]);
        let model = mapping_model(|_, _| bad, choice(0.0, 0.0, 1.0));
        let spec = RewardSpec::r1();
        let mut rng = crate::rng::stream(0, "test", 0);
        let mut s = Session::new(SessionConfig {
            max_rounds: 50,
            max_triggers: 3,
        });

        // Two bad states, forced change, twice; the second change reaches the cap.
        for expected_triggers in [2, 3] {
            s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
            s.step(RobotAction::EasyPrompt, &model, &spec, &mut rng).unwrap();
            let out = s.step(RobotAction::GiveChoices, &model, &spec, &mut rng).unwrap();
            assert_eq!(s.triggers_discussed(), expected_triggers);
            assert_eq!(out.done, expected_triggers == 3);
        }
        assert_eq!(s.done_reason(), Some(DoneReason::MaxTriggers));
    }

    #[test]
    fn choice_prompt_is_illegal_when_not_forced() {
        let model = default_model(0);
        let spec = RewardSpec::r1();
        let mut rng = crate::rng::stream(0, "test", 0);
        let mut s = Session::new(SessionConfig::default());
        assert_eq!(
            s.step(RobotAction::GiveChoices, &model, &spec, &mut rng),
            Err(SessionError::ChoiceNotForced)
        );
    }

    #[test]
    fn stop_only_patients_end_within_one_step_of_a_forced_prompt() {
        let model = default_model(3).with_choice(choice(1.0, 0.0, 0.0));
        let spec = RewardSpec::r1();
        let mut forced_seen = 0;
        for episode in 0..200u64 {
            let mut rng = crate::rng::stream(episode, "test", 0);
            let mut s = Session::new(SessionConfig::default());
            while !s.done() {
                if s.forced_action_required() {
                    forced_seen += 1;
                    let out = s.step(RobotAction::GiveChoices, &model, &spec, &mut rng).unwrap();
                    assert!(out.done, "stop-only choice must end the episode");
                    break;
                }
                let a = RobotAction::LEARNABLE[(rng.next_u32() % 6) as usize];
                s.step(a, &model, &spec, &mut rng).unwrap();
            }
        }
        assert!(forced_seen > 0, "the scenario should trigger forced prompts");
    }

    #[test]
    fn caps_hold_under_random_action_fuzzing() {
        let model = default_model(1);
        let spec = RewardSpec::r2();
        for episode in 0..300u64 {
            let mut rng = crate::rng::stream(episode, "fuzz", 0);
            let mut s = Session::new(SessionConfig::default());
            let mut steps = 0;
            while !s.done() {
                let action = if s.forced_action_required() {
                    // All learnable actions must bounce first.
                    for a in RobotAction::LEARNABLE {
                        assert!(s.step(a, &model, &spec, &mut rng).is_err());
                    }
                    RobotAction::GiveChoices
                } else {
                    RobotAction::LEARNABLE[(rng.next_u32() % 6) as usize]
                };
                s.step(action, &model, &spec, &mut rng).unwrap();
                steps += 1;
                assert!(steps <= 50);
            }
            assert!(s.round() <= 50);
            assert!(s.triggers_discussed() <= 15);
            assert!(s.done_reason().is_some());
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_episodes() {
        let model = default_model(0);
        let spec = RewardSpec::r1();
        let run = |seed: u64| {
            let mut rng = crate::rng::stream(seed, "repro", 0);
            let mut s = Session::new(SessionConfig::default());
            let mut record = Vec::new();
            while !s.done() {
                let action = if s.forced_action_required() {
                    RobotAction::GiveChoices
                } else {
                    RobotAction::LEARNABLE[(rng.next_u32() % 6) as usize]
                };
                let out = s.step(action, &model, &spec, &mut rng).unwrap();
                record.push((action, out.next_state, out.reward.to_bits()));
            }
            record
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn states_can_be_built_from_parts() {
        let s = PwdState::new(
            ResponseRelevance::NoResponse,
            EmotionLevel::Positive,
            Confusion::Yes,
        );
        assert!(s.is_bad());
        assert_eq!(st([0, 1, 1]), s);
    }
}
