//! Brute-force oracles and random instance generators shared by the
//! integration tests. Enumeration walks all |A|^H action sequences, so keep
//! grids at n ≤ 3 and H ≤ 6.

#![allow(dead_code)]

pub mod invariants;

use moci::env::NUM_FEATURES;
use moci::inference::MixtureModel;
use moci::logspace::{log_sum_exp, LOG_ZERO};
use moci::maxent::{irl_gradient, trajectory_reward, weighted_log_likelihood};
use moci::{build_gridworld, Action, Cell, ConstraintSet, Environment, PreferenceWeights, Terrain, Trajectory};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every action sequence of the environment's horizon.
pub fn all_trajectories(env: &Environment) -> Vec<Trajectory> {
    let h = env.horizon();
    let total = Action::ALL.len().pow(h as u32);
    (0..total)
        .map(|mut code| {
            let actions: Vec<Action> = (0..h)
                .map(|_| {
                    let a = Action::ALL[code % Action::ALL.len()];
                    code /= Action::ALL.len();
                    a
                })
                .collect();
            Trajectory::from_actions(env, &actions)
        })
        .collect()
}

pub fn feasible(t: &Trajectory, c: &ConstraintSet) -> bool {
    !t.states().iter().any(|&s| c.contains(s))
}

pub struct Oracle {
    pub trajectories: Vec<Trajectory>,
}

impl Oracle {
    pub fn new(env: &Environment) -> Self {
        Self { trajectories: all_trajectories(env) }
    }

    pub fn log_z(&self, env: &Environment, c: &ConstraintSet, w: &PreferenceWeights) -> f64 {
        log_sum_exp(
            self.trajectories
                .iter()
                .filter(|t| feasible(t, c))
                .map(|t| trajectory_reward(env, t, w)),
        )
    }

    pub fn log_prob(&self, env: &Environment, t: &Trajectory, c: &ConstraintSet, w: &PreferenceWeights) -> f64 {
        if !feasible(t, c) {
            return LOG_ZERO;
        }
        trajectory_reward(env, t, w) - self.log_z(env, c, w)
    }

    /// `log_prob` for every enumerated trajectory, in enumeration order.
    pub fn log_probs(&self, env: &Environment, c: &ConstraintSet, w: &PreferenceWeights) -> Vec<f64> {
        let log_z = self.log_z(env, c, w);
        self.trajectories
            .iter()
            .map(|t| if feasible(t, c) { trajectory_reward(env, t, w) - log_z } else { LOG_ZERO })
            .collect()
    }

    pub fn expected_counts(&self, env: &Environment, c: &ConstraintSet, w: &PreferenceWeights) -> [f64; NUM_FEATURES] {
        let log_z = self.log_z(env, c, w);
        let mut out = [0.0; NUM_FEATURES];
        for t in self.trajectories.iter().filter(|t| feasible(t, c)) {
            let p = (trajectory_reward(env, t, w) - log_z).exp();
            for (o, f) in out.iter_mut().zip(t.feature_counts(env)) {
                *o += p * f;
            }
        }
        out
    }

    pub fn joint(&self, env: &Environment, demos: &[Trajectory], model: &MixtureModel) -> f64 {
        demos
            .iter()
            .map(|t| {
                log_sum_exp(
                    model
                        .weights
                        .iter()
                        .zip(&model.priors)
                        .map(|(w, p)| p.ln() + self.log_prob(env, t, &model.constraints, w)),
                )
            })
            .sum()
    }
}

/// Random small grid: n in 2..=3, random terrain, start top-left, goal at a
/// random non-Water cell, horizon between the shortest dry path and `max_h`.
pub fn random_small_env(rng: &mut impl Rng, max_h: usize) -> Environment {
    loop {
        let n = rng.random_range(2..=3);
        let terrain: Vec<Terrain> = (0..n * n)
            .map(|i| if i == 0 { Terrain::Normal } else { *[Terrain::Normal, Terrain::Grass, Terrain::Rocks, Terrain::Water].choose(rng).unwrap() })
            .collect();
        let goal = rng.random_range(1..n * n);
        let h = rng.random_range(1..=max_h);
        if let Ok(env) = build_gridworld(n, terrain, Cell::new(0, 0), Cell::new(goal / n, goal % n), h) {
            return env;
        }
    }
}

/// Like [`random_small_env`] but with exactly horizon `h`.
pub fn random_small_env_with_horizon(rng: &mut impl Rng, h: usize) -> Environment {
    loop {
        let env = random_small_env(rng, h);
        if let Ok(env) = env.with_horizon(h) {
            return env;
        }
    }
}

pub fn random_weights(rng: &mut impl Rng, scale: f64) -> PreferenceWeights {
    PreferenceWeights(std::array::from_fn(|_| rng.random_range(-scale..=scale)))
}

/// Random constraint set avoiding the start (and including every Water cell
/// with probability one half).
pub fn random_constraints(rng: &mut impl Rng, env: &Environment) -> ConstraintSet {
    let base = rng.random_bool(0.5);
    ConstraintSet::from_states(
        env.num_states(),
        (0..env.num_states()).filter(|&s| {
            s != env.start() && ((base && env.true_constraints().contains(s)) || rng.random_bool(0.2))
        }),
    )
}

/// `m` feasible trajectories drawn uniformly from the enumeration.
pub fn random_demos(rng: &mut impl Rng, oracle: &Oracle, c: &ConstraintSet, m: usize) -> Vec<Trajectory> {
    let pool: Vec<&Trajectory> = oracle.trajectories.iter().filter(|t| feasible(t, c)).collect();
    (0..m).map(|_| (*pool.choose(rng).expect("at least one feasible trajectory")).clone()).collect()
}

pub fn random_model(rng: &mut impl Rng, env: &Environment, k: usize, c: ConstraintSet) -> MixtureModel {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    MixtureModel {
        weights: (0..k).map(|_| random_weights(rng, 2.0)).collect(),
        priors: raw.iter().map(|r| r / total).collect(),
        constraints: { assert_eq!(c.num_states(), env.num_states()); c },
    }
}

/// BFS shortest path from start to goal avoiding `blocked`.
pub fn bfs_shortest(env: &Environment, blocked: &ConstraintSet) -> Option<usize> {
    let mut dist = vec![usize::MAX; env.num_states()];
    let mut queue = std::collections::VecDeque::from([env.start()]);
    dist[env.start()] = 0;
    while let Some(s) = queue.pop_front() {
        if s == env.goal() {
            return Some(dist[s]);
        }
        for a in Action::ALL {
            let t = env.step(s, a);
            if !blocked.contains(t) && dist[t] == usize::MAX {
                dist[t] = dist[s] + 1;
                queue.push_back(t);
            }
        }
    }
    None
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a == LOG_ZERO && b == LOG_ZERO) || (a - b).abs() <= tol
}

/// Central-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-5;

/// Largest component error relative to the largest gradient component.
/// `None` when the gradient vanishes identically (e.g. every reachable
/// state has the same terrain), where a relative error means nothing.
pub fn fd_relative_error(seed: u64) -> Option<f64> {
    let mut r = rng(seed);
    let env = random_small_env(&mut r, 6);
    let oracle = Oracle::new(&env);
    let c = random_constraints(&mut r, &env);
    let m = r.random_range(1..8);
    let demos = random_demos(&mut r, &oracle, &c, m);
    let gamma: Vec<f64> = (0..m).map(|_| r.random_range(0.0..=1.0)).collect();
    let w = random_weights(&mut r, 1.5);
    let g = irl_gradient(&env, &demos, &gamma, &w, &c).unwrap();
    let f = |w: PreferenceWeights| weighted_log_likelihood(&env, &demos, &gamma, &w, &c).unwrap();
    let mut worst = 0.0f64;
    let scale = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale < 1e-3 {
        return None;
    }
    for (j, gj) in g.iter().enumerate() {
        let (mut up, mut down) = (w, w);
        up.0[j] += FD_STEP;
        down.0[j] -= FD_STEP;
        let fd = (f(up) - f(down)) / (2.0 * FD_STEP);
        worst = worst.max((fd - gj).abs() / scale);
    }
    Some(worst)
}
