//! Seeded random terrain at several sizes, with inference on each.
//! FPR here is over every state except start and goal.
//!
//!     cargo run --release --example random_terrain

use moci::metrics::confusion;
use moci::{generate_demos, heterogeneous_experts, run_moci, HorizonRule, InferenceConfig, RandomTerrain};

fn main() -> moci::Result<()> {
    let family = RandomTerrain::default();
    for n in [5, 7, 9] {
        let env = family.generate(n, HorizonRule::Short, 1)?;
        let data = generate_demos(&env, &heterogeneous_experts(20), 1, 0.0)?;
        let (fit, secs) = moci::metrics::timed(|| run_moci(&env, &data.trajectories, &InferenceConfig::default(), 2));
        let fit = fit?;
        let c = confusion(env.true_constraints(), &fit.model.constraints, &[env.start(), env.goal()]);
        println!(
            "n={n:2}  water {:2}  inferred {:2}  recall {:.2}  FPR {:.3}  {:.2}s",
            env.true_constraints().len(),
            fit.model.constraints.len(),
            c.recall(),
            c.fpr(),
            secs
        );
    }
    Ok(())
}
