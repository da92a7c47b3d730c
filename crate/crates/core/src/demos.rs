//! Demonstration generation, demonstration files and the ground-truth
//! label sidecar.
//!
//! A demonstrations file stores one action string per trajectory:
//!
//! ```toml
//! format_version = 1
//! horizon = 4
//! trajectories = ["RRDD", "DDRS"]
//! ```
//!
//! States are re-derived from the environment when loading, so a file is
//! only meaningful together with its environment. Loading rejects
//! trajectories of the wrong length and any trajectory entering Water.
//!
//! Expert identities live in a separate sidecar (`<stem>.labels.toml`) that
//! inference never reads.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::maxent::{sample_trajectory_with, soft_value_iteration_with_rewards};
use crate::presets::Expert;

pub const DEMOS_FORMAT_VERSION: u32 = 1;

/// Pooled demonstrations with their hidden expert labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub trajectories: Vec<Trajectory>,
    /// Index into `experts` for each trajectory.
    pub labels: Vec<usize>,
    pub experts: Vec<Expert>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

/// Samples each expert's soft-optimal policy under the true constraints,
/// pools the samples and shuffles them. `step_penalty` is subtracted from
/// the reward of every state except the goal; zero leaves the experts'
/// terrain rewards untouched.
pub fn generate_demos(env: &Environment, experts: &[Expert], seed: u64, step_penalty: f64) -> Result<Dataset> {
    if !step_penalty.is_finite() || step_penalty < 0.0 {
        return Err(Error::InvalidConfig("step_penalty must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pooled = Vec::new();
    for (k, expert) in experts.iter().enumerate() {
        if !expert.weights.is_finite() {
            return Err(Error::InvalidConfig(format!("expert {:?} has non-finite weights", expert.name)));
        }
        if expert.count == 0 {
            continue;
        }
        let mut rewards = expert.weights.state_rewards(env);
        for (s, r) in rewards.iter_mut().enumerate() {
            if s != env.goal() {
                *r -= step_penalty;
            }
        }
        let policy = soft_value_iteration_with_rewards(env, env.true_constraints(), &rewards)?;
        for _ in 0..expert.count {
            pooled.push((sample_trajectory_with(&policy, env, &mut rng), k));
        }
    }
    pooled.shuffle(&mut rng);
    let (trajectories, labels): (Vec<_>, Vec<_>) = pooled.into_iter().unzip();
    check_clean(env, &trajectories)?;
    Ok(Dataset { trajectories, labels, experts: experts.to_vec() })
}

/// Dynamics-valid and never inside the true constraint set.
pub fn check_clean(env: &Environment, demos: &[Trajectory]) -> Result<()> {
    env.validate_trajectories(demos)?;
    for (index, t) in demos.iter().enumerate() {
        if let Some(&s) = t.states().iter().find(|&&s| env.true_constraints().contains(s)) {
            return Err(Error::InvalidTrajectory {
                index,
                reason: format!("enters water at {}", env.cell(s)),
            });
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemosFile {
    format_version: u32,
    horizon: usize,
    trajectories: Vec<String>,
}

pub fn render_demos(env: &Environment, demos: &[Trajectory]) -> Result<String> {
    check_clean(env, demos)?;
    let file = DemosFile {
        format_version: DEMOS_FORMAT_VERSION,
        horizon: env.horizon(),
        trajectories: demos.iter().map(|t| t.actions().iter().map(|a| a.code()).collect()).collect(),
    };
    Ok(toml::to_string(&file).expect("demonstrations serialize"))
}

pub fn parse_demos(text: &str, origin: &str, env: &Environment) -> Result<Vec<Trajectory>> {
    crate::files::check_toml_version(text, origin, DEMOS_FORMAT_VERSION)?;
    let file: DemosFile = toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    if file.horizon != env.horizon() {
        return Err(Error::parse(
            origin,
            format!("field `horizon`: file has {}, environment has {}", file.horizon, env.horizon()),
        ));
    }
    let mut demos = Vec::with_capacity(file.trajectories.len());
    for (i, codes) in file.trajectories.iter().enumerate() {
        let actions = codes
            .chars()
            .enumerate()
            .map(|(t, c)| {
                Action::from_code(c).ok_or_else(|| {
                    Error::parse(origin, format!("trajectory {i} step {t}: unknown action code '{c}'"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        demos.push(Trajectory::from_actions(env, &actions));
    }
    check_clean(env, &demos)?;
    Ok(demos)
}

pub fn save_demos(env: &Environment, demos: &[Trajectory], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_demos(env, demos)?).map_err(|e| Error::io(path, e))
}

pub fn load_demos(env: &Environment, path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_demos(&text, &path.display().to_string(), env)
}

/// `runs/demos.toml` → `runs/demos.labels.toml`.
pub fn labels_path(demos_path: impl AsRef<Path>) -> PathBuf {
    let p = demos_path.as_ref();
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    p.with_file_name(format!("{stem}.labels.toml"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsFile {
    format_version: u32,
    labels: Vec<usize>,
    experts: Vec<Expert>,
}

/// Ground truth for a demonstrations file.
#[derive(Clone, Debug, PartialEq)]
pub struct Labels {
    pub labels: Vec<usize>,
    pub experts: Vec<Expert>,
}

pub fn save_labels(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = LabelsFile {
        format_version: DEMOS_FORMAT_VERSION,
        labels: dataset.labels.clone(),
        experts: dataset.experts.clone(),
    };
    fs::write(path, toml::to_string(&file).expect("labels serialize")).map_err(|e| Error::io(path, e))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Labels> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    crate::files::check_toml_version(&text, &origin, DEMOS_FORMAT_VERSION)?;
    let file: LabelsFile = toml::from_str(&text).map_err(|e| Error::parse(&origin, e.to_string()))?;
    if let Some(&l) = file.labels.iter().find(|&&l| l >= file.experts.len()) {
        return Err(Error::parse(&origin, format!("field `labels`: expert index {l} out of range")));
    }
    Ok(Labels { labels: file.labels, experts: file.experts })
}

/// Writes the demonstrations and their label sidecar.
pub fn save_dataset(env: &Environment, dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    save_demos(env, &dataset.trajectories, &path)?;
    save_labels(dataset, labels_path(&path))
}
