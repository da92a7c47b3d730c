//! One method on one dataset, evaluated against the ground truth.

use sha2::{Digest, Sha256};

use super::Method;
use crate::baselines::{run_mlci, run_single_pref};
use crate::constraints::ConstraintSet;
use crate::env::{Environment, Trajectory};
use crate::error::Result;
use crate::inference::{avg_log_likelihood, run_moci, InferenceConfig, MixtureModel, Trace};
use crate::maxent::PreferenceWeights;
use crate::metrics::{cmse, confusion, timed, weight_recovery, ExperimentReport};
use crate::presets::Expert;

/// First 16 hex digits of the SHA-256 of a canonical config rendering.
pub fn config_digest(canonical: &str) -> String {
    let mut h = hex::encode(Sha256::digest(canonical.as_bytes()));
    h.truncate(16);
    h
}

/// What to run. `k` only matters for [`Method::Moci`].
#[derive(Clone, Debug, PartialEq)]
pub struct MethodRun<'a> {
    pub method: Method,
    pub k: usize,
    pub config: &'a InferenceConfig,
    /// Seed recorded in the report (the dataset seed).
    pub seed: u64,
    pub digest: &'a str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub model: MixtureModel,
    /// Empty for MLCI, which has no outer loop.
    pub trace: Trace,
}

/// Scores a learned model. Weight recovery is only reported when the
/// cluster count matches the number of experts that contributed data.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    env: &Environment,
    demos: &[Trajectory],
    experts: &[Expert],
    model: &MixtureModel,
    method: &str,
    seed: u64,
    runtime_s: f64,
    digest: &str,
) -> Result<ExperimentReport> {
    let truth = env.true_constraints();
    let c = confusion(truth, &model.constraints, &[env.start(), env.goal()]);
    let present: Vec<PreferenceWeights> = experts.iter().filter(|e| e.count > 0).map(|e| e.weights).collect();
    let weight_error = if model.num_clusters() == present.len() && model.weights.iter().all(|w| w.norm() > 0.0) {
        weight_recovery(&model.weights, &present)?.errors
    } else {
        vec![]
    };
    Ok(ExperimentReport {
        method: method.to_string(),
        clusters: model.num_clusters(),
        seed,
        cmse: cmse(truth, &model.constraints),
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        fpr: c.fpr(),
        avg_log_likelihood: avg_log_likelihood(env, demos, model)?,
        weight_error,
        runtime_s,
        num_constraints: model.constraints.len(),
        config_digest: digest.to_string(),
    })
}

/// Runs a method and evaluates it. MLCI yields one output per expert
/// (method name `mlci:<expert>`), each using that expert's true weights;
/// the others yield exactly one. Runtime covers inference only.
pub fn run_method(env: &Environment, demos: &[Trajectory], experts: &[Expert], run: &MethodRun) -> Result<Vec<RunOutput>> {
    let mut out = Vec::new();
    match run.method {
        Method::Moci | Method::Single => {
            let (fit, secs) = if run.method == Method::Moci {
                timed(|| run_moci(env, demos, run.config, run.k))
            } else {
                timed(|| run_single_pref(env, demos, run.config))
            };
            let fit = fit?;
            let report = evaluate(env, demos, experts, &fit.model, run.method.name(), run.seed, secs, run.digest)?;
            out.push(RunOutput { report, model: fit.model, trace: fit.trace });
        }
        Method::Mlci => {
            for e in experts {
                let (fit, secs) = timed(|| run_mlci(env, demos, &e.weights, run.config));
                let fit = fit?;
                let model = MixtureModel {
                    weights: vec![e.weights],
                    priors: vec![1.0],
                    constraints: fit.constraints,
                };
                let name = format!("mlci:{}", e.name);
                let report = evaluate(env, demos, experts, &model, &name, run.seed, secs, run.digest)?;
                out.push(RunOutput { report, model, trace: vec![] });
            }
        }
    }
    Ok(out)
}

/// Constraint set with only the true constraints; handy as a reference.
pub fn oracle_model(env: &Environment, experts: &[Expert]) -> MixtureModel {
    let m = experts.len().max(1);
    MixtureModel {
        weights: experts.iter().map(|e| e.weights).collect(),
        priors: vec![1.0 / m as f64; m],
        constraints: ConstraintSet::from_states(env.num_states(), env.true_constraints().iter()),
    }
}
