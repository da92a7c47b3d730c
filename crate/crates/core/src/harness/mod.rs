//! Experiment harness: specs, single runs, sweeps and comparison reports.
//!
//! An experiment spec is a TOML file:
//!
//! ```toml
//! format_version = 1
//! step_penalty = 0.0            # optional, subtracted off-goal at generation
//!
//! [env]                         # one of: preset, path, layout, random
//! preset = "comparison-5x5"
//! horizon = "2N"                # or "5N"
//!
//! [[experts]]
//! name = "grass-lover"
//! weights = [0.0, 2.0, -1.0, -1.0]
//! count = 10
//!
//! [inference]                   # K plus any inference setting
//! k = 2
//! threshold = 0.05
//!
//! [sweep]                       # every axis optional; absent axes inherit
//! grid_sizes = [5, 6, 7]        # random terrain only
//! horizons = ["2N", "5N"]
//! demo_counts = [1, 5, 20]      # split round-robin over the experts
//! thresholds = [0.05, 0.5]
//! seed_count = 20               # or: seeds = [3, 4, 5]
//! methods = ["moci", "single", "mlci"]
//! ```

mod report;
mod run;
mod sweep;

pub use report::{collect_reports, comparison_csv, comparison_table, render_comparison, ComparisonRow};
pub use run::{config_digest, evaluate, oracle_model, run_method, MethodRun, RunOutput};
pub use sweep::{aggregate, group_table, load_results, run_cell, run_sweep, Cell, SweepOutcome, SweepRow, CELL_HEADER};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{build_gridworld, load_env, Cell as GridCell, Environment, Terrain};
use crate::error::{Error, Result};
use crate::inference::InferenceConfig;
use crate::presets::{heterogeneous_experts, Expert, HorizonRule, Preset, RandomTerrain};

pub const SPEC_FORMAT_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MOCI_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "moci-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// The mixture method with the spec's `k`.
    Moci,
    /// The mixture method with one cluster.
    Single,
    /// Known-reward constraint inference, once per expert's true weights.
    Mlci,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Moci => "moci",
            Self::Single => "single",
            Self::Mlci => "mlci",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moci" => Ok(Self::Moci),
            "single" => Ok(Self::Single),
            "mlci" => Ok(Self::Mlci),
            _ => Err(Error::Usage(format!("unknown method {s:?} (expected moci, mlci or single)"))),
        }
    }
}

/// Where the environment comes from. At most one source may be set; none
/// means the 5×5 comparison preset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSpec {
    pub preset: Option<Preset>,
    pub path: Option<PathBuf>,
    /// Rows separated by `/`, e.g. `"NGW/NNN/RNN"`; start top-left, goal
    /// bottom-right.
    pub layout: Option<String>,
    pub random: Option<RandomTerrain>,
    /// Side length for random terrain.
    pub n: Option<usize>,
    pub horizon: Option<HorizonRule>,
}

impl EnvSpec {
    pub fn preset(p: Preset) -> Self {
        Self { preset: Some(p), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let sources = [self.preset.is_some(), self.path.is_some(), self.layout.is_some(), self.random.is_some()];
        if sources.iter().filter(|&&s| s).count() > 1 {
            return Err(Error::Usage("env: set only one of preset, path, layout, random".into()));
        }
        if self.n.is_some() && self.random.is_none() {
            return Err(Error::Usage("env.n: only meaningful with random terrain".into()));
        }
        if let Some(r) = &self.random {
            r.validate()?;
        }
        Ok(())
    }

    pub fn is_random(&self) -> bool {
        self.random.is_some()
    }

    /// Builds the environment. `grid_size` and `rule` override the spec;
    /// `seed` only matters for random terrain.
    pub fn build(&self, grid_size: Option<usize>, rule: Option<HorizonRule>, seed: u64) -> Result<Environment> {
        self.validate()?;
        let rule = rule.or(self.horizon);
        let fixed_size = |n: usize, what: &str| match grid_size {
            Some(g) if g != n => Err(Error::Usage(format!("sweep.grid_sizes: {what} is {n}×{n}, cannot build {g}×{g}"))),
            _ => Ok(()),
        };
        if let Some(path) = &self.path {
            let env = load_env(path)?;
            fixed_size(env.n(), "the environment file")?;
            return match rule {
                Some(r) => env.with_horizon(r.horizon(env.n())),
                None => Ok(env),
            };
        }
        if let Some(layout) = &self.layout {
            let (n, terrain) = parse_layout(layout)?;
            fixed_size(n, "env.layout")?;
            let h = rule.unwrap_or_default().horizon(n);
            return build_gridworld(n, terrain, GridCell::new(0, 0), GridCell::new(n - 1, n - 1), h);
        }
        if let Some(gen) = &self.random {
            let n = grid_size
                .or(self.n)
                .ok_or_else(|| Error::Usage("env.n: random terrain needs a grid size".into()))?;
            return gen.generate(n, rule.unwrap_or_default(), seed);
        }
        let preset = self.preset.unwrap_or(Preset::Comparison5x5);
        fixed_size(preset.size(), preset.name())?;
        Ok(preset.environment(rule.unwrap_or_default()))
    }
}

/// `"NGW/NNN/RNN"` → side length and row-major terrain.
pub fn parse_layout(layout: &str) -> Result<(usize, Vec<Terrain>)> {
    let rows: Vec<&str> = layout.split('/').map(str::trim).collect();
    let n = rows.len();
    let mut terrain = Vec::with_capacity(n * n);
    for (r, row) in rows.iter().enumerate() {
        if row.chars().count() != n {
            return Err(Error::Usage(format!("env.layout row {r}: expected {n} cells, got {}", row.chars().count())));
        }
        for (c, ch) in row.chars().enumerate() {
            terrain.push(Terrain::from_code(ch).ok_or_else(|| {
                Error::Usage(format!("env.layout row {r} col {c}: unknown terrain code '{ch}'"))
            })?);
        }
    }
    Ok((n, terrain))
}

/// Cluster count plus inference settings, flattened into one table.
/// Deserialization goes through a TOML table so that unknown keys are
/// still rejected (`flatten` would swallow them).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct InferenceSection {
    pub k: usize,
    #[serde(flatten)]
    pub config: InferenceConfig,
}

impl TryFrom<toml::Table> for InferenceSection {
    type Error = String;

    fn try_from(mut t: toml::Table) -> std::result::Result<Self, String> {
        let k = match t.remove("k") {
            None => default_k(),
            Some(v) => v
                .as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or("`k` must be a non-negative integer")?,
        };
        let config = InferenceConfig::deserialize(t).map_err(|e| e.to_string())?;
        Ok(Self { k, config })
    }
}

fn default_k() -> usize {
    2
}

impl Default for InferenceSection {
    fn default() -> Self {
        Self { k: default_k(), config: InferenceConfig::default() }
    }
}

/// Sweep axes. An absent axis inherits from the rest of the spec; a present
/// axis must be non-empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub grid_sizes: Option<Vec<usize>>,
    pub horizons: Option<Vec<HorizonRule>>,
    pub demo_counts: Option<Vec<usize>>,
    pub thresholds: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub seed_count: Option<usize>,
    pub methods: Option<Vec<Method>>,
}

impl SweepAxes {
    pub fn validate(&self) -> Result<()> {
        fn nonempty<T>(name: &str, v: &Option<Vec<T>>) -> Result<()> {
            match v {
                Some(v) if v.is_empty() => Err(Error::Usage(format!("sweep.{name}: axis must not be empty"))),
                _ => Ok(()),
            }
        }
        nonempty("grid_sizes", &self.grid_sizes)?;
        nonempty("horizons", &self.horizons)?;
        nonempty("demo_counts", &self.demo_counts)?;
        nonempty("thresholds", &self.thresholds)?;
        nonempty("seeds", &self.seeds)?;
        nonempty("methods", &self.methods)?;
        if self.seeds.is_some() && self.seed_count.is_some() {
            return Err(Error::Usage("sweep: set seeds or seed_count, not both".into()));
        }
        if self.seed_count == Some(0) {
            return Err(Error::Usage("sweep.seed_count: must be at least 1".into()));
        }
        if let Some(t) = &self.thresholds {
            if t.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::Usage("sweep.thresholds: values must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn seed_list(&self, base: u64) -> Vec<u64> {
        match (&self.seeds, self.seed_count) {
            (Some(s), _) => s.clone(),
            (None, Some(n)) => (0..n as u64).map(|i| base + i).collect(),
            (None, None) => vec![base],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub format_version: u32,
    #[serde(default)]
    pub env: EnvSpec,
    #[serde(default = "default_experts")]
    pub experts: Vec<Expert>,
    #[serde(default)]
    pub step_penalty: f64,
    #[serde(default)]
    pub inference: InferenceSection,
    #[serde(default)]
    pub sweep: Option<SweepAxes>,
    /// Output directory; the command line and the environment variable
    /// take precedence.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
}

fn default_experts() -> Vec<Expert> {
    heterogeneous_experts(20)
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            format_version: SPEC_FORMAT_VERSION,
            env: EnvSpec::default(),
            experts: default_experts(),
            step_penalty: 0.0,
            inference: InferenceSection::default(),
            sweep: None,
            outputs: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != SPEC_FORMAT_VERSION {
            return Err(Error::FormatVersion { found: self.format_version, expected: SPEC_FORMAT_VERSION });
        }
        if self.experts.is_empty() {
            return Err(Error::Usage("experts: at least one expert required".into()));
        }
        if self.inference.k == 0 {
            return Err(Error::Usage("inference.k: must be at least 1".into()));
        }
        if !(self.step_penalty >= 0.0) || !self.step_penalty.is_finite() {
            return Err(Error::Usage("step_penalty: must be finite and non-negative".into()));
        }
        self.env.validate()?;
        self.inference.config.validate().map_err(|e| Error::Usage(format!("inference: {e}")))?;
        if let Some(s) = &self.sweep {
            s.validate()?;
            if s.grid_sizes.is_some() && !self.env.is_random() {
                return Err(Error::Usage("sweep.grid_sizes: requires random terrain (env.random)".into()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        crate::files::check_toml_version(text, origin, SPEC_FORMAT_VERSION)?;
        let spec: Self = toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// Experts with `total` demonstrations dealt round-robin, first experts
    /// receiving the remainder.
    pub fn experts_with_total(&self, total: usize) -> Vec<Expert> {
        let m = self.experts.len();
        self.experts
            .iter()
            .enumerate()
            .map(|(i, e)| Expert { count: total / m + usize::from(i < total % m), ..e.clone() })
            .collect()
    }
}
