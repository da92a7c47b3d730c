//! Exact maximum-entropy trajectory distributions under hard constraints.
//!
//! The trajectory space is every length-`H` action sequence from the start
//! state. A trajectory's probability is proportional to `exp(R_w(ξ))` when it
//! avoids the constraint set and zero otherwise, where `R_w(ξ)` sums
//! `wᵀφ(s)` over all `H + 1` visited states. All quantities are kept in log
//! space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::env::{Action, Environment, Trajectory, NUM_ACTIONS, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, LOG_ZERO};

/// Linear reward weights over the terrain features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreferenceWeights(pub [f64; NUM_FEATURES]);

impl PreferenceWeights {
    pub const fn new(w: [f64; NUM_FEATURES]) -> Self {
        Self(w)
    }

    pub const fn zero() -> Self {
        Self([0.0; NUM_FEATURES])
    }

    pub fn as_array(&self) -> &[f64; NUM_FEATURES] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Per-state reward `wᵀφ(s)`.
    pub fn state_rewards(&self, env: &Environment) -> Vec<f64> {
        env.terrain().iter().map(|t| self.0[t.feature_index()]).collect()
    }

    pub fn dot(&self, phi: &[f64; NUM_FEATURES]) -> f64 {
        self.0.iter().zip(phi).map(|(w, f)| w * f).sum()
    }
}

impl From<[f64; NUM_FEATURES]> for PreferenceWeights {
    fn from(w: [f64; NUM_FEATURES]) -> Self {
        Self(w)
    }
}

/// Backward log-partition table: entry `(t, s)` is the log of the summed
/// exponentiated rewards of all feasible continuations from `s` at step `t`,
/// including `s`'s own reward.
#[derive(Clone, Debug, PartialEq)]
pub struct LogPartitionTable {
    horizon: usize,
    num_states: usize,
    values: Vec<f64>,
    log_z: f64,
}

impl LogPartitionTable {
    #[inline]
    pub fn get(&self, t: usize, s: usize) -> f64 {
        self.values[t * self.num_states + s]
    }

    /// `log Z(C, w)` from the start state.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// No feasible trajectory exists (`log Z = -inf`).
    pub fn is_degenerate(&self) -> bool {
        self.log_z == LOG_ZERO
    }
}

/// `R_w(ξ)`: summed state rewards over the `H + 1` visited states.
pub fn trajectory_reward(env: &Environment, traj: &Trajectory, w: &PreferenceWeights) -> f64 {
    traj.states().iter().map(|&s| w.0[env.terrain_at(s).feature_index()]).sum()
}

/// Full backward pass for `log Z(C, w)`.
pub fn log_partition(
    env: &Environment,
    constraints: &ConstraintSet,
    w: &PreferenceWeights,
) -> Result<LogPartitionTable> {
    if constraints.contains(env.start()) {
        return Err(Error::StartConstrained);
    }
    Ok(backward_table(env, constraints, &w.state_rewards(env)))
}

pub(crate) fn backward_table(
    env: &Environment,
    constraints: &ConstraintSet,
    rewards: &[f64],
) -> LogPartitionTable {
    let h = env.horizon();
    let ns = env.num_states();
    let mut values = vec![LOG_ZERO; (h + 1) * ns];
    for s in 0..ns {
        if !constraints.contains(s) {
            values[h * ns + s] = rewards[s];
        }
    }
    for t in (0..h).rev() {
        let (head, tail) = values.split_at_mut((t + 1) * ns);
        let next = &tail[..ns];
        let cur = &mut head[t * ns..];
        for s in 0..ns {
            if constraints.contains(s) {
                continue;
            }
            let lse = log_sum_exp(env.successors(s).map(|s2| next[s2]));
            cur[s] = if lse == LOG_ZERO { LOG_ZERO } else { rewards[s] + lse };
        }
    }
    let log_z = values[env.start()];
    LogPartitionTable { horizon: h, num_states: ns, values, log_z }
}

/// `log Z(C, w)` only, using two rolling rows. Start must not be constrained.
pub(crate) fn log_partition_value(
    env: &Environment,
    constraints: &ConstraintSet,
    rewards: &[f64],
    scratch: &mut (Vec<f64>, Vec<f64>),
) -> f64 {
    let ns = env.num_states();
    let (next, cur) = scratch;
    next.clear();
    next.resize(ns, LOG_ZERO);
    cur.clear();
    cur.resize(ns, LOG_ZERO);
    for s in 0..ns {
        if !constraints.contains(s) {
            next[s] = rewards[s];
        }
    }
    for _ in 0..env.horizon() {
        for s in 0..ns {
            cur[s] = if constraints.contains(s) {
                LOG_ZERO
            } else {
                let lse = log_sum_exp(env.successors(s).map(|s2| next[s2]));
                if lse == LOG_ZERO { LOG_ZERO } else { rewards[s] + lse }
            };
        }
        std::mem::swap(next, cur);
    }
    next[env.start()]
}

/// `log P(ξ | C, w)`; `-inf` if the trajectory touches a constrained state.
pub fn trajectory_log_prob(
    env: &Environment,
    traj: &Trajectory,
    constraints: &ConstraintSet,
    w: &PreferenceWeights,
    table: &LogPartitionTable,
) -> f64 {
    if traj.states().iter().any(|&s| constraints.contains(s)) {
        return LOG_ZERO;
    }
    trajectory_reward(env, traj, w) - table.log_z()
}

/// Per-timestep state visitation probabilities `D_t(s)` for `t = 0..=H`
/// induced by the table's per-step action distribution.
pub(crate) fn state_visitation(
    env: &Environment,
    rewards: &[f64],
    table: &LogPartitionTable,
) -> Vec<Vec<f64>> {
    let ns = env.num_states();
    let h = env.horizon();
    let mut visits = vec![vec![0.0; ns]; h + 1];
    visits[0][env.start()] = 1.0;
    for t in 0..h {
        let (done, rest) = visits.split_at_mut(t + 1);
        let cur = &done[t];
        let next = &mut rest[0];
        for s in 0..ns {
            let mass = cur[s];
            if mass == 0.0 {
                continue;
            }
            let here = table.get(t, s);
            for &s2 in env.successors(s) {
                let v = table.get(t + 1, s2);
                if v != LOG_ZERO {
                    next[s2] += mass * (rewards[s] + v - here).exp();
                }
            }
        }
    }
    visits
}

fn expected_counts_from_table(
    env: &Environment,
    rewards: &[f64],
    table: &LogPartitionTable,
) -> [f64; NUM_FEATURES] {
    let mut phi = [0.0; NUM_FEATURES];
    for row in state_visitation(env, rewards, table) {
        for (s, p) in row.into_iter().enumerate() {
            phi[env.terrain_at(s).feature_index()] += p;
        }
    }
    phi
}

/// `E[φ(ξ)]` under `P(ξ | C, w)`, via a forward visitation pass.
pub fn expected_feature_counts(
    env: &Environment,
    constraints: &ConstraintSet,
    w: &PreferenceWeights,
) -> Result<[f64; NUM_FEATURES]> {
    let table = log_partition(env, constraints, w)?;
    if table.is_degenerate() {
        return Err(Error::Degenerate);
    }
    Ok(expected_counts_from_table(env, &w.state_rewards(env), &table))
}

/// `Σ_i γ_i log P(ξ_i | C, w)`.
pub fn weighted_log_likelihood(
    env: &Environment,
    demos: &[Trajectory],
    responsibilities: &[f64],
    w: &PreferenceWeights,
    constraints: &ConstraintSet,
) -> Result<f64> {
    let table = log_partition(env, constraints, w)?;
    Ok(demos
        .iter()
        .zip(responsibilities)
        .filter(|(_, &g)| g != 0.0)
        .map(|(t, &g)| g * trajectory_log_prob(env, t, constraints, w, &table))
        .sum())
}

/// Responsibility-weighted log-likelihood gradient
/// `Σ_i γ_i (φ(ξ_i) − E[φ(ξ)])`.
pub fn irl_gradient(
    env: &Environment,
    demos: &[Trajectory],
    responsibilities: &[f64],
    w: &PreferenceWeights,
    constraints: &ConstraintSet,
) -> Result<[f64; NUM_FEATURES]> {
    assert_eq!(demos.len(), responsibilities.len(), "one responsibility per demonstration");
    let (empirical, mass) = weighted_empirical_counts(env, demos, responsibilities);
    if mass == 0.0 {
        return Ok([0.0; NUM_FEATURES]);
    }
    let expected = expected_feature_counts(env, constraints, w)?;
    Ok(std::array::from_fn(|j| empirical[j] - mass * expected[j]))
}

fn weighted_empirical_counts(
    env: &Environment,
    demos: &[Trajectory],
    responsibilities: &[f64],
) -> ([f64; NUM_FEATURES], f64) {
    let mut empirical = [0.0; NUM_FEATURES];
    let mut mass = 0.0;
    for (t, &g) in demos.iter().zip(responsibilities) {
        mass += g;
        for (e, f) in empirical.iter_mut().zip(t.feature_counts(env)) {
            *e += g * f;
        }
    }
    (empirical, mass)
}

/// Fixed-step gradient ascent on the responsibility-weighted log-likelihood.
pub fn gradient_ascent_weights(
    env: &Environment,
    demos: &[Trajectory],
    responsibilities: &[f64],
    w_init: &PreferenceWeights,
    constraints: &ConstraintSet,
    learning_rate: f64,
    steps: usize,
) -> Result<PreferenceWeights> {
    assert_eq!(demos.len(), responsibilities.len(), "one responsibility per demonstration");
    if constraints.contains(env.start()) {
        return Err(Error::StartConstrained);
    }
    let (empirical, mass) = weighted_empirical_counts(env, demos, responsibilities);
    let mut w = *w_init;
    if mass == 0.0 || learning_rate == 0.0 {
        return Ok(w);
    }
    for step in 0..steps {
        let rewards = w.state_rewards(env);
        let table = backward_table(env, constraints, &rewards);
        if table.is_degenerate() {
            return Err(Error::Degenerate);
        }
        let expected = expected_counts_from_table(env, &rewards, &table);
        let grad: [f64; NUM_FEATURES] = std::array::from_fn(|j| empirical[j] - mass * expected[j]);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { step, weights: w.0.to_vec() });
        }
        for (wj, gj) in w.0.iter_mut().zip(grad) {
            *wj += learning_rate * gj;
        }
        if !w.is_finite() {
            return Err(Error::NonFiniteGradient { step, weights: w.0.to_vec() });
        }
    }
    Ok(w)
}

/// Finite-horizon soft-optimal policy: `π_t(a | s)` for `t < H`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftPolicy {
    horizon: usize,
    num_states: usize,
    probs: Vec<[f64; NUM_ACTIONS]>,
}

impl SoftPolicy {
    /// Action distribution at step `t` in state `s`. All zeros for states
    /// with no feasible continuation.
    pub fn action_probs(&self, t: usize, s: usize) -> &[f64; NUM_ACTIONS] {
        &self.probs[t * self.num_states + s]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// A policy that plays `choose(t, s)` with probability one.
    pub fn deterministic(env: &Environment, choose: impl Fn(usize, usize) -> Action) -> Self {
        let ns = env.num_states();
        let probs = (0..env.horizon() * ns)
            .map(|i| {
                let mut p = [0.0; NUM_ACTIONS];
                p[choose(i / ns, i % ns).index()] = 1.0;
                p
            })
            .collect();
        Self { horizon: env.horizon(), num_states: ns, probs }
    }
}

/// Soft value iteration: the per-step factorization of the constrained
/// maximum-entropy trajectory distribution.
pub fn soft_value_iteration(
    env: &Environment,
    constraints: &ConstraintSet,
    w: &PreferenceWeights,
) -> Result<SoftPolicy> {
    soft_value_iteration_with_rewards(env, constraints, &w.state_rewards(env))
}

/// Soft value iteration for an arbitrary per-state reward vector, e.g.
/// terrain rewards plus a per-step penalty off the goal.
pub fn soft_value_iteration_with_rewards(
    env: &Environment,
    constraints: &ConstraintSet,
    rewards: &[f64],
) -> Result<SoftPolicy> {
    if rewards.len() != env.num_states() {
        return Err(Error::InvalidConfig(format!(
            "reward vector has {} entries, expected {}",
            rewards.len(),
            env.num_states()
        )));
    }
    if constraints.contains(env.start()) {
        return Err(Error::StartConstrained);
    }
    let table = backward_table(env, constraints, rewards);
    if table.is_degenerate() {
        return Err(Error::Degenerate);
    }
    let ns = env.num_states();
    let h = env.horizon();
    let mut probs = vec![[0.0; NUM_ACTIONS]; h * ns];
    for t in 0..h {
        for s in 0..ns {
            let here = table.get(t, s);
            if here == LOG_ZERO {
                continue;
            }
            let p = &mut probs[t * ns + s];
            for (a, &s2) in env.successors(s).iter().enumerate() {
                let v = table.get(t + 1, s2);
                if v != LOG_ZERO {
                    p[a] = (rewards[s] + v - here).exp();
                }
            }
        }
    }
    Ok(SoftPolicy { horizon: h, num_states: ns, probs })
}

/// Samples one trajectory with a seeded generator.
pub fn sample_trajectory(policy: &SoftPolicy, env: &Environment, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_trajectory_with(policy, env, &mut rng)
}

pub fn sample_trajectory_with<R: Rng + ?Sized>(
    policy: &SoftPolicy,
    env: &Environment,
    rng: &mut R,
) -> Trajectory {
    let mut actions = Vec::with_capacity(policy.horizon());
    let mut s = env.start();
    for t in 0..policy.horizon() {
        let probs = policy.action_probs(t, s);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (a, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                chosen = Some(a);
                if u < acc {
                    break;
                }
            }
        }
        let a = Action::ALL[chosen.expect("policy has a feasible action")];
        actions.push(a);
        s = env.step(s, a);
    }
    Trajectory::from_actions(env, &actions)
}
