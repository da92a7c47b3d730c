use serde::{Deserialize, Serialize};

use super::{Action, Environment, NUM_FEATURES};
use crate::error::{Error, Result};

/// A fixed-horizon demonstration: `H + 1` states and the `H` actions between
/// them, starting at the environment's start state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trajectory {
    states: Vec<usize>,
    actions: Vec<Action>,
}

impl Trajectory {
    /// Rolls the environment dynamics forward from the start state.
    pub fn from_actions(env: &Environment, actions: &[Action]) -> Self {
        let mut states = Vec::with_capacity(actions.len() + 1);
        let mut s = env.start();
        states.push(s);
        for &a in actions {
            s = env.step(s, a);
            states.push(s);
        }
        Self { states, actions: actions.to_vec() }
    }

    /// Builds a trajectory from raw parts without checking it.
    pub fn from_parts(states: Vec<usize>, actions: Vec<Action>) -> Self {
        Self { states, actions }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn visits(&self, s: usize) -> bool {
        self.states.contains(&s)
    }

    /// Summed one-hot features over all visited states, including the last.
    pub fn feature_counts(&self, env: &Environment) -> [f64; NUM_FEATURES] {
        let mut phi = [0.0; NUM_FEATURES];
        for &s in &self.states {
            phi[env.terrain_at(s).feature_index()] += 1.0;
        }
        phi
    }

    pub fn validate(&self, env: &Environment, index: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidTrajectory { index, reason });
        if self.actions.len() != env.horizon() {
            return bad(format!("{} actions, horizon is {}", self.actions.len(), env.horizon()));
        }
        if self.states.len() != self.actions.len() + 1 {
            return bad(format!("{} states for {} actions", self.states.len(), self.actions.len()));
        }
        if let Some(&s) = self.states.iter().find(|&&s| s >= env.num_states()) {
            return bad(format!("state {s} outside the grid"));
        }
        if self.states[0] != env.start() {
            return bad(format!("starts at {} instead of {}", self.states[0], env.start()));
        }
        for (t, &a) in self.actions.iter().enumerate() {
            let expected = env.step(self.states[t], a);
            if self.states[t + 1] != expected {
                return bad(format!(
                    "step {t}: {:?} from {} leads to {expected}, trajectory has {}",
                    a,
                    self.states[t],
                    self.states[t + 1]
                ));
            }
        }
        Ok(())
    }
}
