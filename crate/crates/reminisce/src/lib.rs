//! Simulated reminiscence-therapy sessions and a tabular Q-learning toolkit
//! for robot conversation strategies.
//!
//! The crate bundles a stochastic patient model over 18 conversational
//! states, a session environment with a rule-triggered choice prompt, a
//! revised Q-learning trainer that attributes the choice step's reward to
//! the action that led into it, and an evaluation harness with an exact
//! dynamic-programming oracle. The `reminisce` binary wires everything into
//! reproducible file-based experiments.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod domain;
pub mod evaluation;
pub mod patient;
pub mod qlearning;
pub mod rng;
pub mod session;

#[cfg(test)]
pub(crate) mod testutil;

pub use domain::{
    Confusion, EmotionLevel, PwdChoice, PwdState, ResponseRelevance, RewardSpec, RewardVariant,
    RobotAction,
};
pub use patient::{
    default_model, generate_model, ChoiceDistribution, GeneratorParams, ModelConstraintReport,
    ModelError, TransitionModel,
};
pub use session::{DoneReason, Session, SessionConfig, SessionError, StepOutcome};
