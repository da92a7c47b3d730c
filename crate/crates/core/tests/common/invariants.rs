//! Model invariants as seeded checks. Each takes a seed, builds a random
//! instance and returns a description of the first violation.

use moci::demos::{generate_demos, parse_demos, render_demos};
use moci::env::{parse_env, render_env};
use moci::files::{parse_model, parse_trace, render_model, trace_table, Table};
use moci::inference::{
    avg_log_likelihood, constraint_search, e_step, m_step_priors, run_moci, GainNormalization, InferenceConfig,
};
use moci::maxent::expected_feature_counts;
use moci::presets::Expert;
use rand::Rng;

use super::{random_constraints, random_demos, random_model, random_small_env, random_weights, rng, Oracle};

pub type Check = fn(u64) -> Result<(), String>;

pub const ALL: [(&str, Check); 7] = [
    ("responsibility and prior normalization", normalization),
    ("L_avg replication invariance", replication),
    ("accepted gain exceeds threshold", acceptance_gain),
    ("no demonstrated state constrained", demonstrated_states_free),
    ("feature-count conservation", feature_conservation),
    ("determinism", determinism),
    ("serialization round trips", round_trips),
];

fn small_cfg(seed: u64) -> InferenceConfig {
    InferenceConfig { irl_steps: 10, max_iterations: 3, learning_rate: 0.01, seed, ..Default::default() }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

pub fn normalization(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 4);
    let oracle = Oracle::new(&env);
    let c = random_constraints(&mut r, &env);
    let n_demos = r.random_range(1..8);
    let demos = random_demos(&mut r, &oracle, &c, n_demos);
    let n_model = r.random_range(1..4);
    let model = random_model(&mut r, &env, n_model, c);
    let resp = e_step(&env, &demos, &model).map_err(|e| e.to_string())?;
    for i in 0..demos.len() {
        let s: f64 = resp.row(i).iter().sum();
        ensure((s - 1.0).abs() < 1e-9, || format!("row {i} sums to {s}"))?;
        ensure(resp.row(i).iter().all(|&g| (0.0..=1.0).contains(&g)), || format!("row {i} out of [0,1]"))?;
    }
    let p: f64 = m_step_priors(&resp).iter().sum();
    ensure((p - 1.0).abs() < 1e-9, || format!("priors sum to {p}"))
}

pub fn replication(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 4);
    let oracle = Oracle::new(&env);
    let c = random_constraints(&mut r, &env);
    let n_demos = r.random_range(1..6);
    let demos = random_demos(&mut r, &oracle, &c, n_demos);
    let n_model = r.random_range(1..4);
    let model = random_model(&mut r, &env, n_model, c);
    let times = r.random_range(2..5);
    let replicated: Vec<_> = (0..times).flat_map(|_| demos.iter().cloned()).collect();
    let a = avg_log_likelihood(&env, &demos, &model).map_err(|e| e.to_string())?;
    let b = avg_log_likelihood(&env, &replicated, &model).map_err(|e| e.to_string())?;
    ensure((a - b).abs() <= 1e-9 * a.abs().max(1.0), || format!("L_avg {a} vs {b} after ×{times}"))
}

pub fn acceptance_gain(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 5);
    let oracle = Oracle::new(&env);
    let n_demos = r.random_range(1..8);
    let demos = random_demos(&mut r, &oracle, env.true_constraints(), n_demos);
    let total = r.random_bool(0.5);
    let cfg = InferenceConfig {
        threshold: [0.001, 0.01, 0.05, 0.5][r.random_range(0..4)],
        gain: if total { GainNormalization::Total } else { GainNormalization::PerTrajectory },
        ..small_cfg(seed)
    };
    let bar = if total { cfg.threshold } else { demos.len() as f64 * cfg.threshold };
    let k = r.random_range(1..3);
    let mut model = random_model(&mut r, &env, k, moci::ConstraintSet::empty(env.num_states()));
    let mut candidates = env.candidate_states(&demos);
    let accepted =
        constraint_search(&env, &demos, &mut model, &mut candidates, &cfg, &mut rng(seed)).map_err(|e| e.to_string())?;
    for a in &accepted {
        ensure(a.gain > bar, || format!("state {} accepted with gain {} ≤ {bar}", a.state, a.gain))?;
    }
    // Same property on a full run's trace.
    let fit = run_moci(&env, &demos, &cfg, 2).map_err(|e| e.to_string())?;
    for rec in &fit.trace {
        for a in &rec.accepted {
            ensure(a.gain > bar, || format!("iteration {}: gain {} ≤ {bar}", rec.iteration, a.gain))?;
        }
    }
    Ok(())
}

pub fn demonstrated_states_free(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 5);
    let oracle = Oracle::new(&env);
    let n_demos = r.random_range(1..8);
    let demos = random_demos(&mut r, &oracle, env.true_constraints(), n_demos);
    let cfg = InferenceConfig { threshold: 0.001, ..small_cfg(seed) };
    let fit = run_moci(&env, &demos, &cfg, r.random_range(1..4)).map_err(|e| e.to_string())?;
    for t in &demos {
        for &s in t.states() {
            ensure(!fit.model.constraints.contains(s), || format!("demonstrated state {s} constrained"))?;
        }
    }
    Ok(())
}

pub fn feature_conservation(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 6);
    let c = random_constraints(&mut r, &env);
    let w = random_weights(&mut r, 3.0);
    let steps = (env.horizon() + 1) as f64;
    match expected_feature_counts(&env, &c, &w) {
        Ok(e) => {
            let s: f64 = e.iter().sum();
            ensure((s - steps).abs() < 1e-9, || format!("expected counts sum to {s}, want {steps}"))?;
            ensure(e.iter().all(|&x| x >= -1e-12), || format!("negative expected count {e:?}"))?;
            let water = moci::Terrain::Water.feature_index();
            if (0..env.num_states()).all(|s| env.terrain_at(s) != moci::Terrain::Water || c.contains(s)) {
                ensure(e[water].abs() < 1e-12, || format!("blocked water still visited: {}", e[water]))?;
            }
        }
        // Every path blocked: nothing to conserve.
        Err(moci::Error::Degenerate) => {}
        Err(e) => return Err(e.to_string()),
    }
    let oracle = Oracle::new(&env);
    for t in random_demos(&mut r, &oracle, &moci::ConstraintSet::empty(env.num_states()), 5) {
        let s: f64 = t.feature_counts(&env).iter().sum();
        ensure(s == steps, || format!("trajectory counts sum to {s}"))?;
    }
    Ok(())
}

pub fn determinism(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 5);
    let oracle = Oracle::new(&env);
    let n_demos = r.random_range(1..8);
    let demos = random_demos(&mut r, &oracle, env.true_constraints(), n_demos);
    let cfg = InferenceConfig { max_candidates: r.random_bool(0.5).then_some(2), ..small_cfg(seed) };
    let k = r.random_range(1..4);
    let a = run_moci(&env, &demos, &cfg, k).map_err(|e| e.to_string())?;
    let b = run_moci(&env, &demos, &cfg, k).map_err(|e| e.to_string())?;
    ensure(a == b, || "two identical runs differ".into())?;
    // Bitwise, not just ==: -0.0 == 0.0 would hide a difference.
    let bits = |f: &moci::Fit| -> Vec<u64> {
        f.model.weights.iter().flat_map(|w| w.0).chain(f.model.priors.iter().copied()).map(f64::to_bits).collect()
    };
    ensure(bits(&a) == bits(&b), || "weights or priors differ bitwise".into())
}

pub fn round_trips(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 5);
    let back = parse_env(&render_env(&env), "env").map_err(|e| e.to_string())?;
    ensure(back == env, || "environment differs after round trip".into())?;

    let experts = [Expert::new("a", random_weights(&mut r, 2.0), r.random_range(0..4)), Expert::new("b", random_weights(&mut r, 2.0), 2)];
    let data = generate_demos(&env, &experts, seed, 0.0).map_err(|e| e.to_string())?;
    let text = render_demos(&env, &data.trajectories).map_err(|e| e.to_string())?;
    let demos = parse_demos(&text, "demos", &env).map_err(|e| e.to_string())?;
    ensure(demos == data.trajectories, || "demonstrations differ after round trip".into())?;

    let fit = run_moci(&env, &demos, &small_cfg(seed), r.random_range(1..4)).map_err(|e| e.to_string())?;
    let model = parse_model(&render_model(&fit.model), "model").map_err(|e| e.to_string())?;
    ensure(model == fit.model, || "model differs after round trip".into())?;
    let table = Table::parse(&trace_table(&fit.trace).render(), "trace").map_err(|e| e.to_string())?;
    let trace = parse_trace(&table, "trace").map_err(|e| e.to_string())?;
    ensure(trace == fit.trace, || "trace differs after round trip".into())
}
