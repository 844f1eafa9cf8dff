//! Hand-built deterministic models shared across unit tests.

use crate::domain::{PwdState, RobotAction};
use crate::patient::{ChoiceDistribution, ModelMetadata, TransitionMatrix, TransitionModel};

/// State from its trace code, e.g. `st([2, -1, 0])`.
pub(crate) fn st(code: [i8; 3]) -> PwdState {
    PwdState::from_trace_code(code).expect("valid trace code")
}

/// Matrix sending every state to `target` with probability 1.
pub(crate) fn degenerate_matrix(target: usize) -> TransitionMatrix {
    let mut m = [[0.0; PwdState::COUNT]; PwdState::COUNT];
    for row in m.iter_mut() {
        row[target] = 1.0;
    }
    m
}

/// Model sending every action to one fixed state.
pub(crate) fn degenerate_model(target: PwdState, choice: ChoiceDistribution) -> TransitionModel {
    TransitionModel::new(
        [degenerate_matrix(target.index()); 6],
        choice,
        ModelMetadata::default(),
    )
    .unwrap()
}

/// Deterministic model with `next = f(state, action)`.
pub(crate) fn mapping_model(
    f: impl Fn(PwdState, RobotAction) -> PwdState,
    choice: ChoiceDistribution,
) -> TransitionModel {
    let mut matrices = [[[0.0; PwdState::COUNT]; PwdState::COUNT]; 6];
    for (ai, action) in RobotAction::LEARNABLE.into_iter().enumerate() {
        for s in PwdState::all() {
            matrices[ai][s.index()][f(s, action).index()] = 1.0;
        }
    }
    TransitionModel::new(matrices, choice, ModelMetadata::default()).unwrap()
}
