//! The two reference methods on mixed data: constraint inference with a
//! known (but single) reward, and the one-cluster ablation.
//!
//!     cargo run --release --example known_reward

use moci::metrics::confusion;
use moci::{cmse, generate_demos, heterogeneous_experts, run_mlci, run_moci, run_single_pref, HorizonRule, InferenceConfig, Preset};

fn main() -> moci::Result<()> {
    let env = Preset::Comparison5x5.environment(HorizonRule::Short);
    let experts = heterogeneous_experts(20);
    let data = generate_demos(&env, &experts, 0, 0.0)?;
    let cfg = InferenceConfig::default();
    let truth = env.true_constraints();
    let show = |name: &str, c: &moci::ConstraintSet| {
        let m = confusion(truth, c, &[env.start(), env.goal()]);
        println!("{name:22} |C| {:2}  CMSE {:.3}  recall {:.2}  FPR {:.3}", c.len(), cmse(truth, c), m.recall(), m.fpr());
    };

    for e in &experts {
        // Whichever expert's reward is assumed, the other expert's data
        // looks like it avoids states for no reason.
        let fit = run_mlci(&env, &data.trajectories, &e.weights, &cfg)?;
        show(&format!("known reward: {}", e.name), &fit.constraints);
    }
    let single = run_single_pref(&env, &data.trajectories, &cfg)?;
    show("single preference", &single.model.constraints);
    let mix = run_moci(&env, &data.trajectories, &cfg, 2)?;
    show("mixture, K=2", &mix.model.constraints);
    Ok(())
}
