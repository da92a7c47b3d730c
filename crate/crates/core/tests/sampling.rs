//! Sampled trajectories follow the exact MaxEnt distribution.

mod common;

use std::collections::HashMap;

use common::*;
use moci::maxent::{sample_trajectory_with, soft_value_iteration};
use moci::{build_gridworld, Cell, PreferenceWeights, Terrain};

fn total_variation(env: &moci::Environment, w: PreferenceWeights, samples: usize) -> f64 {
    let oracle = Oracle::new(env);
    let c = env.true_constraints();
    let policy = soft_value_iteration(env, c, &w).unwrap();
    let mut r = rng(11);
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..samples {
        let t = sample_trajectory_with(&policy, env, &mut r);
        assert!(feasible(&t, c), "sampled a constrained trajectory");
        *counts.entry(t.actions().iter().map(|a| a.index()).collect()).or_default() += 1;
    }
    0.5 * oracle
        .trajectories
        .iter()
        .zip(oracle.log_probs(env, c, &w))
        .map(|(t, lp)| {
            let p = lp.exp();
            let key: Vec<usize> = t.actions().iter().map(|a| a.index()).collect();
            let q = counts.get(&key).copied().unwrap_or(0) as f64 / samples as f64;
            (p - q).abs()
        })
        .sum::<f64>()
}

#[test]
fn monte_carlo_matches_enumeration() {
    use Terrain::*;
    let env = build_gridworld(2, vec![Normal, Grass, Water, Rocks], Cell::new(0, 0), Cell::new(1, 1), 3).unwrap();
    let tv = total_variation(&env, PreferenceWeights::new([0.0, 1.0, -0.5, -1.0]), 200_000);
    assert!(tv < 0.01, "TV {tv}");

    #[rustfmt::skip]
    let terrain = vec![Normal, Grass, Normal, Rocks, Water, Grass, Normal, Normal, Normal];
    let env = build_gridworld(3, terrain, Cell::new(0, 0), Cell::new(2, 2), 4).unwrap();
    let tv = total_variation(&env, PreferenceWeights::new([0.0, 2.0, -1.0, -1.0]), 400_000);
    assert!(tv < 0.01, "TV {tv}");
}
