//! Expectation-maximization over a mixture of constrained maximum-entropy
//! experts that share one set of hard constraints.
//!
//! Each outer iteration runs, in order:
//!
//! 1. E-step: posterior responsibilities of every cluster for every
//!    demonstration.
//! 2. Prior update: column means of the responsibilities.
//! 3. Weight update: responsibility-weighted gradient ascent, per cluster.
//! 4. Constraint search: greedy addition of unvisited states while the best
//!    candidate's likelihood gain exceeds the threshold.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::env::{Environment, Trajectory};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, LOG_ZERO};
use crate::maxent::{
    gradient_ascent_weights, log_partition, log_partition_value, trajectory_reward, PreferenceWeights,
};

/// How the constraint-search gain is compared with the threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainNormalization {
    /// Gain divided by the number of demonstrations.
    #[default]
    PerTrajectory,
    /// Raw joint log-likelihood gain.
    Total,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceConfig {
    /// Minimum likelihood gain for accepting a constraint.
    pub threshold: f64,
    pub learning_rate: f64,
    /// Gradient steps per weight update.
    pub irl_steps: usize,
    /// Maximum outer EM iterations.
    pub max_iterations: usize,
    /// Outer-loop tolerance on the change in average log-likelihood.
    pub em_tolerance: f64,
    /// When set, each greedy round scores a seeded random subset of at most
    /// this many candidates.
    pub max_candidates: Option<usize>,
    pub seed: u64,
    /// Initial weights are drawn uniformly from `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub gain: GainNormalization,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            learning_rate: 0.001,
            irl_steps: 50,
            max_iterations: 10,
            em_tolerance: 1e-4,
            max_candidates: None,
            seed: 0,
            init_scale: 0.1,
            gain: GainNormalization::PerTrajectory,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive and finite");
        }
        if self.irl_steps == 0 || self.max_iterations == 0 {
            return bad("irl_steps and max_iterations must be at least 1");
        }
        if self.max_candidates == Some(0) {
            return bad("max_candidates must be at least 1 when set");
        }
        if !(self.em_tolerance >= 0.0) || !(self.init_scale >= 0.0) {
            return bad("em_tolerance and init_scale must be non-negative");
        }
        Ok(())
    }
}

/// `K` preference weight vectors with their priors and the shared constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub weights: Vec<PreferenceWeights>,
    pub priors: Vec<f64>,
    pub constraints: ConstraintSet,
}

impl MixtureModel {
    /// Uniform priors, no constraints.
    pub fn new(weights: Vec<PreferenceWeights>, num_states: usize) -> Self {
        let k = weights.len();
        assert!(k >= 1, "a mixture needs at least one cluster");
        Self { weights, priors: vec![1.0 / k as f64; k], constraints: ConstraintSet::empty(num_states) }
    }

    pub fn num_clusters(&self) -> usize {
        self.weights.len()
    }

    fn log_priors(&self) -> Vec<f64> {
        self.priors.iter().map(|p| if *p > 0.0 { p.ln() } else { LOG_ZERO }).collect()
    }
}

/// `|D| x K` posterior cluster assignments, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Responsibilities {
    rows: usize,
    clusters: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let clusters = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == clusters), "ragged responsibility rows");
        Self { rows: rows.len(), clusters, values: rows.into_iter().flatten().collect() }
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.clusters + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.clusters..(i + 1) * self.clusters]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, k)).collect()
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }
}

/// Per-cluster log-partition values and trajectory rewards for one model.
struct Likelihood<'a> {
    env: &'a Environment,
    log_priors: Vec<f64>,
    state_rewards: Vec<Vec<f64>>,
    /// `[k][i]`
    traj_rewards: Vec<Vec<f64>>,
    scratch: (Vec<f64>, Vec<f64>),
}

impl<'a> Likelihood<'a> {
    fn new(env: &'a Environment, demos: &[Trajectory], model: &MixtureModel) -> Self {
        Self {
            env,
            log_priors: model.log_priors(),
            state_rewards: model.weights.iter().map(|w| w.state_rewards(env)).collect(),
            traj_rewards: model
                .weights
                .iter()
                .map(|w| demos.iter().map(|t| trajectory_reward(env, t, w)).collect())
                .collect(),
            scratch: Default::default(),
        }
    }

    fn log_z(&mut self, constraints: &ConstraintSet) -> Vec<f64> {
        let env = self.env;
        let scratch = &mut self.scratch;
        self.state_rewards
            .iter()
            .map(|r| log_partition_value(env, constraints, r, scratch))
            .collect()
    }

    /// Joint log-likelihood assuming no demonstration touches `constraints`.
    fn joint(&mut self, constraints: &ConstraintSet) -> f64 {
        let log_z = self.log_z(constraints);
        let n = self.traj_rewards.first().map_or(0, Vec::len);
        let k = log_z.len();
        (0..n)
            .map(|i| {
                log_sum_exp((0..k).map(|c| self.log_priors[c] + self.traj_rewards[c][i] - log_z[c]))
            })
            .sum()
    }
}

fn violates(demos: &[Trajectory], constraints: &ConstraintSet) -> bool {
    demos.iter().any(|t| t.states().iter().any(|&s| constraints.contains(s)))
}

/// `L(C, {w_k}, {π_k}) = Σ_i log Σ_k π_k P(ξ_i | C, w_k)`.
pub fn joint_log_likelihood(env: &Environment, demos: &[Trajectory], model: &MixtureModel) -> Result<f64> {
    if model.constraints.contains(env.start()) {
        return Err(Error::StartConstrained);
    }
    if violates(demos, &model.constraints) {
        return Ok(LOG_ZERO);
    }
    Ok(Likelihood::new(env, demos, model).joint(&model.constraints))
}

/// Joint log-likelihood divided by `|D|`.
pub fn avg_log_likelihood(env: &Environment, demos: &[Trajectory], model: &MixtureModel) -> Result<f64> {
    if demos.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(joint_log_likelihood(env, demos, model)? / demos.len() as f64)
}

/// Posterior responsibilities, normalized per row in log space.
pub fn e_step(env: &Environment, demos: &[Trajectory], model: &MixtureModel) -> Result<Responsibilities> {
    let k = model.num_clusters();
    let log_priors = model.log_priors();
    let tables = model
        .weights
        .iter()
        .map(|w| log_partition(env, &model.constraints, w))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(demos.len() * k);
    for (i, t) in demos.iter().enumerate() {
        let feasible = !t.states().iter().any(|&s| model.constraints.contains(s));
        let joint: Vec<f64> = (0..k)
            .map(|c| {
                if feasible {
                    log_priors[c] + trajectory_reward(env, t, &model.weights[c]) - tables[c].log_z()
                } else {
                    LOG_ZERO
                }
            })
            .collect();
        let norm = log_sum_exp(joint.iter().copied());
        if norm == LOG_ZERO || !norm.is_finite() {
            return Err(Error::InfeasibleDemonstration(i));
        }
        values.extend(joint.iter().map(|lp| (lp - norm).exp()));
    }
    Ok(Responsibilities { rows: demos.len(), clusters: k, values })
}

/// Column means of the responsibilities.
pub fn m_step_priors(resp: &Responsibilities) -> Vec<f64> {
    let n = resp.num_rows() as f64;
    (0..resp.num_clusters()).map(|k| resp.column(k).iter().sum::<f64>() / n).collect()
}

/// Independent gradient-ascent update of every cluster's weights.
pub fn m_step_weights(
    env: &Environment,
    demos: &[Trajectory],
    resp: &Responsibilities,
    model: &MixtureModel,
    cfg: &InferenceConfig,
) -> Result<Vec<PreferenceWeights>> {
    (0..model.num_clusters())
        .map(|k| {
            gradient_ascent_weights(
                env,
                demos,
                &resp.column(k),
                &model.weights[k],
                &model.constraints,
                cfg.learning_rate,
                cfg.irl_steps,
            )
        })
        .collect()
}

/// Joint log-likelihood with `candidate` added to the model's constraints.
/// The model itself is not modified.
pub fn score_candidate(
    env: &Environment,
    demos: &[Trajectory],
    model: &MixtureModel,
    candidate: usize,
) -> Result<f64> {
    let augmented = model.constraints.with(candidate);
    if augmented.contains(env.start()) {
        return Err(Error::StartConstrained);
    }
    if violates(demos, &augmented) {
        return Ok(LOG_ZERO);
    }
    Ok(Likelihood::new(env, demos, model).joint(&augmented))
}

/// A constraint accepted by the greedy search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedConstraint {
    pub state: usize,
    /// Unnormalized joint log-likelihood gain.
    pub gain: f64,
}

fn normalized_gain(gain: f64, num_demos: usize, mode: GainNormalization) -> f64 {
    match mode {
        GainNormalization::PerTrajectory => gain / num_demos as f64,
        GainNormalization::Total => gain,
    }
}

/// Greedy forward selection over `candidates`. Accepted states are added to
/// `model.constraints` and removed from `candidates`.
pub fn constraint_search<R: Rng + ?Sized>(
    env: &Environment,
    demos: &[Trajectory],
    model: &mut MixtureModel,
    candidates: &mut Vec<usize>,
    cfg: &InferenceConfig,
    rng: &mut R,
) -> Result<Vec<AcceptedConstraint>> {
    if demos.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut likelihood = Likelihood::new(env, demos, model);
    let mut current = likelihood.joint(&model.constraints);
    let mut accepted = Vec::new();
    let mut trial = model.constraints.clone();
    while !candidates.is_empty() {
        let pool: Vec<usize> = match cfg.max_candidates {
            Some(m) if m < candidates.len() => {
                let mut subset: Vec<usize> = candidates.choose_multiple(rng, m).copied().collect();
                subset.sort_unstable();
                subset
            }
            _ => candidates.clone(),
        };
        let mut best: Option<(usize, f64)> = None;
        for &c in &pool {
            trial.insert(c);
            let score = likelihood.joint(&trial);
            trial.remove(c);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((c, score));
            }
        }
        let Some((state, score)) = best else { break };
        let gain = score - current;
        if !(normalized_gain(gain, demos.len(), cfg.gain) > cfg.threshold) {
            break;
        }
        model.constraints.insert(state);
        trial.insert(state);
        candidates.retain(|&c| c != state);
        accepted.push(AcceptedConstraint { state, gain });
        current = score;
    }
    Ok(accepted)
}

/// One row of the per-iteration diagnostics trace. Iteration 0 is the
/// initial model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub avg_log_likelihood: f64,
    pub num_constraints: usize,
    pub accepted: Vec<AcceptedConstraint>,
    pub priors: Vec<f64>,
    pub weights: Vec<PreferenceWeights>,
}

pub type Trace = Vec<TraceRecord>;

#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub model: MixtureModel,
    pub trace: Trace,
    pub converged: bool,
}

/// A failed run together with the trace recorded up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub trace: Trace,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} trace records)", self.error, self.trace.len())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

/// Draws `k` weight vectors, one seeded generator per cluster, redrawing
/// any cluster that lands within `1e-6` of an earlier one.
pub fn initial_weights(k: usize, cfg: &InferenceConfig) -> Vec<PreferenceWeights> {
    let mut out: Vec<PreferenceWeights> = Vec::with_capacity(k);
    for c in 0..k {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(c as u64 + 1)));
        loop {
            let w = PreferenceWeights(std::array::from_fn(|_| {
                if cfg.init_scale > 0.0 {
                    rng.random_range(-cfg.init_scale..=cfg.init_scale)
                } else {
                    0.0
                }
            }));
            let clash = out
                .iter()
                .any(|o| o.0.iter().zip(&w.0).all(|(a, b)| (a - b).abs() < 1e-6));
            if !clash || cfg.init_scale == 0.0 {
                out.push(w);
                break;
            }
        }
    }
    out
}

/// Runs the full EM procedure from randomly initialized weights.
pub fn run_moci(
    env: &Environment,
    demos: &[Trajectory],
    cfg: &InferenceConfig,
    k: usize,
) -> std::result::Result<Fit, RunFailure> {
    if k == 0 {
        return Err(RunFailure { error: Error::InvalidConfig("K must be at least 1".into()), trace: vec![] });
    }
    let model = MixtureModel::new(initial_weights(k, cfg), env.num_states());
    run_moci_from(env, demos, cfg, model)
}

/// Runs EM starting from a given model.
pub fn run_moci_from(
    env: &Environment,
    demos: &[Trajectory],
    cfg: &InferenceConfig,
    model: MixtureModel,
) -> std::result::Result<Fit, RunFailure> {
    let mut trace = Vec::new();
    match em_loop(env, demos, cfg, model, &mut trace) {
        Ok((model, converged)) => Ok(Fit { model, trace, converged }),
        Err(error) => Err(RunFailure { error, trace }),
    }
}

fn em_loop(
    env: &Environment,
    demos: &[Trajectory],
    cfg: &InferenceConfig,
    mut model: MixtureModel,
    trace: &mut Trace,
) -> Result<(MixtureModel, bool)> {
    cfg.validate()?;
    if demos.is_empty() {
        return Err(Error::EmptyDataset);
    }
    env.validate_trajectories(demos)?;
    let mut candidates = env.candidate_states(demos);
    candidates.retain(|&c| !model.constraints.contains(c));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));

    let mut prev = avg_log_likelihood(env, demos, &model)?;
    trace.push(TraceRecord {
        iteration: 0,
        avg_log_likelihood: prev,
        num_constraints: model.constraints.len(),
        accepted: vec![],
        priors: model.priors.clone(),
        weights: model.weights.clone(),
    });

    for iteration in 1..=cfg.max_iterations {
        let resp = e_step(env, demos, &model)?;
        model.priors = m_step_priors(&resp);
        model.weights = m_step_weights(env, demos, &resp, &model, cfg)?;
        let accepted = constraint_search(env, demos, &mut model, &mut candidates, cfg, &mut rng)?;
        let avg = avg_log_likelihood(env, demos, &model)?;
        trace.push(TraceRecord {
            iteration,
            avg_log_likelihood: avg,
            num_constraints: model.constraints.len(),
            accepted,
            priors: model.priors.clone(),
            weights: model.weights.clone(),
        });
        if (avg - prev).abs() < cfg.em_tolerance {
            return Ok((model, true));
        }
        prev = avg;
    }
    Ok((model, false))
}
