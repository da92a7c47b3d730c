//! A small resumable sweep over demonstration counts and thresholds,
//! followed by the method comparison table. Run it twice: the second run
//! reuses every finished cell.
//!
//!     cargo run --release --example sweep -- [out-dir]

use std::path::PathBuf;

use moci::harness::{collect_reports, comparison_table, render_comparison, run_sweep, ExperimentSpec};

const SPEC: &str = r#"
format_version = 1

[env]
preset = "comparison-5x5"

[inference]
k = 2

[sweep]
demo_counts = [5, 20]
thresholds = [0.05, 0.5]
seed_count = 3
methods = ["moci", "single", "mlci"]
"#;

fn main() -> moci::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "moci-out/sweep-example".into()));
    let spec = ExperimentSpec::parse(SPEC, "inline spec")?;
    let outcome = run_sweep(&spec, &out, 0, 1, &|key, reused| {
        eprintln!("{} {key}", if reused { "reused" } else { "ran   " })
    })?;
    println!("{} cells computed, {} reused, {} failures", outcome.computed, outcome.reused, outcome.failures());
    println!("aggregates in {}", out.display());
    print!("{}", render_comparison(&comparison_table(&collect_reports(&out)?)));
    Ok(())
}
