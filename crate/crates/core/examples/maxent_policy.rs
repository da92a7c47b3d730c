//! Maximum-entropy trajectory distribution under hard constraints: the
//! partition function, trajectory probabilities, expected feature counts,
//! and sampling from the soft-optimal policy.
//!
//!     cargo run --example maxent_policy

use moci::maxent::{
    expected_feature_counts, log_partition, sample_trajectory, soft_value_iteration, trajectory_log_prob,
};
use moci::{ConstraintSet, HorizonRule, PreferenceWeights, Preset};

fn main() -> moci::Result<()> {
    let env = Preset::Comparison5x5.environment(HorizonRule::Short);
    let w = PreferenceWeights::new(moci::presets::GRASS_LOVER);

    for (name, c) in [("unconstrained", ConstraintSet::empty(env.num_states())), ("water blocked", env.true_constraints().clone())] {
        let table = log_partition(&env, &c, &w)?;
        let counts = expected_feature_counts(&env, &c, &w)?;
        println!("{name:>14}: log Z = {:8.3}  E[phi] = {:.3?}", table.log_z(), counts);
    }

    let c = env.true_constraints();
    let table = log_partition(&env, c, &w)?;
    let policy = soft_value_iteration(&env, c, &w)?;
    for seed in 0..3 {
        let t = sample_trajectory(&policy, &env, seed);
        let codes: String = t.actions().iter().map(|a| a.code()).collect();
        println!("seed {seed}: {codes}  log p = {:.3}", trajectory_log_prob(&env, &t, c, &w, &table));
    }
    Ok(())
}
