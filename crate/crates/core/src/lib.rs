//! Joint inference of shared hard constraints and per-cluster preferences
//! from unlabeled demonstrations of several experts, in deterministic
//! tabular gridworlds.
//!
//! ```no_run
//! use moci::{generate_demos, heterogeneous_experts, run_moci, HorizonRule, InferenceConfig, Preset};
//!
//! let env = Preset::Paper6x6.environment(HorizonRule::Short);
//! let data = generate_demos(&env, &heterogeneous_experts(20), 0, 0.0)?;
//! let fit = run_moci(&env, &data.trajectories, &InferenceConfig::default(), 2)?;
//! println!("{:?}", fit.model.constraints.to_vec());
//! # Ok::<(), moci::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod constraints;
pub mod demos;
pub mod env;
pub mod error;
pub mod files;
pub mod harness;
pub mod inference;
pub mod logspace;
pub mod maxent;
pub mod metrics;
pub mod presets;

pub use baselines::{run_mlci, run_single_pref, MlciFit};
pub use constraints::ConstraintSet;
pub use demos::{generate_demos, Dataset};
pub use env::{build_gridworld, Action, Cell, Environment, Terrain, Trajectory};
pub use error::{Error, Result};
pub use inference::{run_moci, Fit, InferenceConfig, MixtureModel, RunFailure};
pub use maxent::PreferenceWeights;
pub use metrics::{cmse, confusion, weight_recovery, ExperimentReport};
pub use presets::{heterogeneous_experts, Expert, HorizonRule, Preset, RandomTerrain};
