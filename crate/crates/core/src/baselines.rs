//! Reference methods: constraint inference under a known reward, and the
//! single-preference ablation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintSet;
use crate::env::{Environment, Trajectory};
use crate::error::{Error, Result};
use crate::inference::{
    constraint_search, run_moci, AcceptedConstraint, Fit, InferenceConfig, MixtureModel, RunFailure,
};
use crate::maxent::PreferenceWeights;

/// Outcome of a known-reward constraint inference run.
#[derive(Clone, Debug, PartialEq)]
pub struct MlciFit {
    pub constraints: ConstraintSet,
    pub accepted: Vec<AcceptedConstraint>,
}

/// Greedy constraint inference with a fixed, known reward: a single
/// component with prior one, no E-step and no weight updates. Shares the
/// constraint-search code path with the mixture method.
pub fn run_mlci(
    env: &Environment,
    demos: &[Trajectory],
    known: &PreferenceWeights,
    cfg: &InferenceConfig,
) -> Result<MlciFit> {
    if demos.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(cfg.threshold >= 0.0) {
        return Err(Error::InvalidConfig("threshold must be non-negative".into()));
    }
    env.validate_trajectories(demos)?;
    let mut model = MixtureModel::new(vec![*known], env.num_states());
    let mut candidates = env.candidate_states(demos);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let accepted = constraint_search(env, demos, &mut model, &mut candidates, cfg, &mut rng)?;
    Ok(MlciFit { constraints: model.constraints, accepted })
}

/// The mixture method with a single cluster.
pub fn run_single_pref(
    env: &Environment,
    demos: &[Trajectory],
    cfg: &InferenceConfig,
) -> std::result::Result<Fit, RunFailure> {
    run_moci(env, demos, cfg, 1)
}
