//! Full inference on the 6×6 world: recovered constraints, cluster
//! weights matched to the true experts, and the per-iteration trace.
//!
//!     cargo run --release --example infer_mixture -- [seed]

use moci::metrics::confusion;
use moci::{cmse, generate_demos, heterogeneous_experts, run_moci, weight_recovery, HorizonRule, InferenceConfig, Preset};

fn main() -> moci::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let env = Preset::Paper6x6.environment(HorizonRule::Short);
    let experts = heterogeneous_experts(20);
    let data = generate_demos(&env, &experts, seed, 0.0)?;

    let cfg = InferenceConfig { seed, ..Default::default() };
    let fit = run_moci(&env, &data.trajectories, &cfg, 2)?;

    for r in &fit.trace {
        let added: Vec<String> = r.accepted.iter().map(|a| format!("{}", env.cell(a.state))).collect();
        println!("iter {:2}  L_avg {:9.4}  |C| {}  +{}", r.iteration, r.avg_log_likelihood, r.num_constraints, added.join(" "));
    }
    println!("converged: {}", fit.converged);

    let truth = env.true_constraints();
    let c = confusion(truth, &fit.model.constraints, &[env.start(), env.goal()]);
    println!("CMSE {:.4}  precision {:.3}  recall {:.3}  FPR {:.3}", cmse(truth, &fit.model.constraints), c.precision(), c.recall(), c.fpr());

    let true_w: Vec<_> = experts.iter().map(|e| e.weights).collect();
    let rec = weight_recovery(&fit.model.weights, &true_w)?;
    for (k, e) in experts.iter().enumerate() {
        let j = rec.permutation[k];
        println!(
            "{:12} <- cluster {j} (prior {:.2})  w = {:.2?}  error {:.3}",
            e.name, fit.model.priors[j], fit.model.weights[j].0, rec.errors[k]
        );
    }
    Ok(())
}
