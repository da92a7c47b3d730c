//! Command-line front end. The `moci` binary is a one-line wrapper around
//! [`main`].
//!
//! Every subcommand writes into the output directory (`--out`, else
//! `$MOCI_OUT_DIR`, else the config's `outputs`, else `moci-out`):
//!
//! | command     | writes                                                  |
//! |-------------|---------------------------------------------------------|
//! | `gen-env`   | `env.toml`                                              |
//! | `gen-demos` | `demos.toml`, `demos.labels.toml`                       |
//! | `infer`     | `model.toml`, `trace.csv`, `reports.csv`                |
//! | `sweep`     | `results.csv`, aggregate tables, `cells/`               |
//! | `report`    | `comparison.csv`, `comparison.md`                       |

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::demos::{generate_demos, labels_path, load_demos, load_labels, save_dataset};
use crate::env::{load_env, save_env};
use crate::error::{Error, Result};
use crate::files::{reports_table, save_model, save_trace};
use crate::harness::{
    collect_reports, comparison_csv, comparison_table, config_digest, render_comparison, run_method, run_sweep,
    EnvSpec, ExperimentSpec, Method, MethodRun, DEFAULT_OUT_DIR, OUT_DIR_ENV,
};
use crate::maxent::PreferenceWeights;
use crate::presets::{Expert, HorizonRule, Preset, RandomTerrain};

#[derive(Debug, Parser)]
#[command(name = "moci", version, about = "Shared-constraint inference from mixed-preference demonstrations")]
pub struct Cli {
    /// Seed for terrain, demonstrations and initialization.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Experiment spec (TOML); flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an environment file.
    GenEnv(GenEnvArgs),
    /// Sample demonstrations from the ground-truth experts.
    GenDemos(GenDemosArgs),
    /// Infer constraints (and preferences) from demonstrations.
    Infer(InferArgs),
    /// Run a parameter sweep from the config's [sweep] table.
    Sweep,
    /// Summarize a sweep or inference directory as a method comparison.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenEnvArgs {
    #[arg(long, conflicts_with_all = ["layout", "random"])]
    pub preset: Option<Preset>,
    /// Rows separated by '/', e.g. "NGW/NNN/RNN".
    #[arg(long, conflicts_with = "random")]
    pub layout: Option<String>,
    /// Draw i.i.d. terrain of side `--n`.
    #[arg(long, requires = "n")]
    pub random: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub water_density: Option<f64>,
    #[arg(long)]
    pub grass_density: Option<f64>,
    #[arg(long)]
    pub rock_density: Option<f64>,
    /// 2N or 5N.
    #[arg(long)]
    pub horizon: Option<HorizonRule>,
}

#[derive(Debug, Args)]
pub struct GenDemosArgs {
    /// Environment file [default: <out>/env.toml].
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// Total demonstrations, dealt round-robin over the experts.
    #[arg(long)]
    pub count: Option<usize>,
    /// Per-step penalty on non-goal states.
    #[arg(long)]
    pub step_penalty: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Environment file [default: <out>/env.toml].
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// Demonstrations file [default: <out>/demos.toml].
    #[arg(long)]
    pub demos: Option<PathBuf>,
    #[arg(long, default_value = "moci")]
    pub method: Method,
    /// Number of clusters (moci only).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub irl_steps: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Score at most this many random candidates per greedy round.
    #[arg(long)]
    pub max_candidates: Option<usize>,
    /// Known weights for mlci, e.g. "0,2,-1,-1" (Normal,Grass,Rocks,Water).
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
    /// Use this expert's true weights for mlci (from the labels sidecar).
    #[arg(long, conflicts_with = "weights")]
    pub expert: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding results.csv or reports.csv [default: <out>].
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

struct Ctx {
    spec: ExperimentSpec,
    out: PathBuf,
    seed: u64,
    jobs: usize,
}

impl Ctx {
    fn path(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default))
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }
}

fn parse_weights(s: &str) -> Result<PreferenceWeights> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Usage(format!("--weights: not a number: {x:?}"))))
        .collect::<Result<_>>()?;
    let arr: [f64; 4] = xs
        .try_into()
        .map_err(|v: Vec<f64>| Error::Usage(format!("--weights: expected 4 values, got {}", v.len())))?;
    Ok(PreferenceWeights(arr))
}

fn gen_env(ctx: &Ctx, a: &GenEnvArgs) -> Result<()> {
    let mut spec: EnvSpec = ctx.spec.env.clone();
    let any_density = a.water_density.is_some() || a.grass_density.is_some() || a.rock_density.is_some();
    if a.preset.is_some() || a.layout.is_some() || a.random {
        spec = EnvSpec { horizon: spec.horizon, ..Default::default() };
        spec.preset = a.preset;
        spec.layout = a.layout.clone();
        if a.random {
            spec.random = Some(RandomTerrain::default());
        }
    }
    if any_density || a.n.is_some() {
        let Some(r) = spec.random.as_mut() else {
            return Err(Error::Usage("--n and densities need random terrain (--random)".into()));
        };
        r.water_density = a.water_density.unwrap_or(r.water_density);
        r.grass_density = a.grass_density.unwrap_or(r.grass_density);
        r.rock_density = a.rock_density.unwrap_or(r.rock_density);
        spec.n = a.n.or(spec.n);
    }
    spec.horizon = a.horizon.or(spec.horizon);
    let env = spec.build(None, None, ctx.seed)?;
    ctx.ensure_out()?;
    let path = ctx.out.join("env.toml");
    save_env(&env, &path)?;
    eprintln!(
        "wrote {} ({}×{}, horizon {}, {} water cells)",
        path.display(),
        env.n(),
        env.n(),
        env.horizon(),
        env.true_constraints().len()
    );
    Ok(())
}

fn gen_demos(ctx: &Ctx, a: &GenDemosArgs) -> Result<()> {
    let env = load_env(ctx.path(&a.env, "env.toml"))?;
    let experts = match a.count {
        Some(n) => ctx.spec.experts_with_total(n),
        None => ctx.spec.experts.clone(),
    };
    let penalty = a.step_penalty.unwrap_or(ctx.spec.step_penalty);
    let data = generate_demos(&env, &experts, ctx.seed, penalty)?;
    ctx.ensure_out()?;
    let path = ctx.out.join("demos.toml");
    save_dataset(&env, &data, &path)?;
    eprintln!("wrote {} ({} trajectories) and {}", path.display(), data.len(), labels_path(&path).display());
    Ok(())
}

fn infer(ctx: &Ctx, a: &InferArgs) -> Result<()> {
    let env = load_env(ctx.path(&a.env, "env.toml"))?;
    let demos_path = ctx.path(&a.demos, "demos.toml");
    let demos = load_demos(&env, &demos_path)?;
    let labels = labels_path(&demos_path);
    // Ground truth is optional; without it reports carry no weight error.
    let truth: Vec<Expert> = if labels.exists() {
        let l = load_labels(&labels)?;
        l.experts
            .iter()
            .enumerate()
            .map(|(i, e)| Expert { count: l.labels.iter().filter(|&&x| x == i).count(), ..e.clone() })
            .collect()
    } else {
        vec![]
    };

    let mut cfg = ctx.spec.inference.config.clone();
    cfg.seed = ctx.seed;
    cfg.threshold = a.threshold.unwrap_or(cfg.threshold);
    cfg.learning_rate = a.learning_rate.unwrap_or(cfg.learning_rate);
    cfg.irl_steps = a.irl_steps.unwrap_or(cfg.irl_steps);
    cfg.max_iterations = a.max_iterations.unwrap_or(cfg.max_iterations);
    cfg.max_candidates = a.max_candidates.or(cfg.max_candidates);
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let k = a.k.unwrap_or(ctx.spec.inference.k);
    if k == 0 {
        return Err(Error::Usage("--k must be at least 1".into()));
    }

    // For mlci the known rewards are passed as the run's expert list.
    let experts: Vec<Expert> = match a.method {
        Method::Mlci => {
            if let Some(w) = &a.weights {
                vec![Expert::new("given", parse_weights(w)?, 0)]
            } else if let Some(name) = &a.expert {
                let e = truth
                    .iter()
                    .find(|e| &e.name == name)
                    .ok_or_else(|| Error::Usage(format!("--expert: no expert named {name:?} in {}", labels.display())))?;
                vec![e.clone()]
            } else if !truth.is_empty() {
                truth.clone()
            } else {
                return Err(Error::Usage(
                    "mlci needs known weights: pass --weights, --expert, or keep the labels sidecar next to the demonstrations".into(),
                ));
            }
        }
        _ => truth.clone(),
    };

    let digest = config_digest(&format!("{}\nmethod = {:?}\nk = {k}\n", toml::to_string(&cfg).unwrap_or_default(), a.method));
    let run = MethodRun { method: a.method, k, config: &cfg, seed: ctx.seed, digest: &digest };
    let outputs = if a.method == Method::Mlci {
        // Score every known-reward run against the full ground truth.
        let mut outs = run_method(&env, &demos, &experts, &run)?;
        for o in &mut outs {
            o.report = crate::harness::evaluate(
                &env,
                &demos,
                &truth,
                &o.model,
                &o.report.method,
                ctx.seed,
                o.report.runtime_s,
                &digest,
            )?;
        }
        outs
    } else {
        run_method(&env, &demos, &truth, &run)?
    };

    ctx.ensure_out()?;
    let single = outputs.len() == 1;
    for o in &outputs {
        let suffix = if single { String::new() } else { format!(".{}", o.report.method.replace(':', "-")) };
        save_model(&o.model, ctx.out.join(format!("model{suffix}.toml")))?;
        if !o.trace.is_empty() {
            save_trace(&o.trace, ctx.out.join(format!("trace{suffix}.csv")))?;
        }
        let r = &o.report;
        eprintln!(
            "{}: {} constraints, CMSE {:.4}, precision {:.3}, recall {:.3}, FPR {:.3}, L_avg {:.4}, {:.2}s",
            r.method, r.num_constraints, r.cmse, r.precision, r.recall, r.fpr, r.avg_log_likelihood, r.runtime_s
        );
    }
    let reports: Vec<_> = outputs.iter().map(|o| o.report.clone()).collect();
    reports_table(&reports).save(ctx.out.join("reports.csv"))?;
    Ok(())
}

fn sweep(ctx: &Ctx) -> Result<()> {
    ctx.ensure_out()?;
    let outcome = run_sweep(&ctx.spec, &ctx.out, ctx.seed, ctx.jobs, &|key, reused| {
        eprintln!("{} {key}", if reused { "reused" } else { "done  " });
    })?;
    eprintln!(
        "{} cells computed, {} reused, {} failed runs; results in {}",
        outcome.computed,
        outcome.reused,
        outcome.failures(),
        ctx.out.display()
    );
    Ok(())
}

fn report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let dir = a.dir.clone().unwrap_or_else(|| ctx.out.clone());
    let rows = comparison_table(&collect_reports(&dir)?);
    let md = render_comparison(&rows);
    comparison_csv(&rows).save(dir.join("comparison.csv"))?;
    fs::write(dir.join("comparison.md"), &md).map_err(|e| Error::io(dir.join("comparison.md"), e))?;
    print!("{md}");
    Ok(())
}

/// Parses arguments and runs the chosen command.
pub fn run(cli: Cli) -> Result<()> {
    let spec = match &cli.config {
        Some(p) => ExperimentSpec::load(p)?,
        None => ExperimentSpec::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| spec.outputs.clone())
        .unwrap_or_else(|| Path::new(DEFAULT_OUT_DIR).to_path_buf());
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    let ctx = Ctx { spec, out, seed: cli.seed, jobs };
    match &cli.command {
        Command::GenEnv(a) => gen_env(&ctx, a),
        Command::GenDemos(a) => gen_demos(&ctx, a),
        Command::Infer(a) => infer(&ctx, a),
        Command::Sweep => sweep(&ctx),
        Command::Report(a) => report(&ctx, a),
    }
}

/// Exit code 2 for usage errors, 1 for everything else.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Usage(_)) { 2 } else { 1 }
        }
    }
}

pub fn main() -> i32 {
    main_from(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn weights_flag() {
        assert_eq!(parse_weights("0, 2,-1,-1").unwrap().0, [0.0, 2.0, -1.0, -1.0]);
        assert!(parse_weights("1,2").is_err());
    }

    #[test]
    fn mlci_without_weights_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(main_from(["moci", "--out", out, "gen-env", "--preset", "comparison-5x5"]), 0);
        assert_eq!(main_from(["moci", "--out", out, "gen-demos", "--count", "2"]), 0);
        fs::remove_file(dir.path().join("demos.labels.toml")).unwrap();
        assert_eq!(main_from(["moci", "--out", out, "infer", "--method", "mlci"]), 2);
    }
}
