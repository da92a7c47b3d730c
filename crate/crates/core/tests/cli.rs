//! The `moci` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn moci(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moci"))
        .current_dir(dir)
        .env_remove("MOCI_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn pipeline_writes_versioned_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&moci(d, &["--out", "run", "gen-env", "--preset", "paper-6x6"]));
    ok(&moci(d, &["--out", "run", "--seed", "3", "gen-demos"]));
    ok(&moci(d, &["--out", "run", "--seed", "3", "infer", "--k", "2"]));
    for f in ["env.toml", "demos.toml", "demos.labels.toml", "model.toml"] {
        let text = fs::read_to_string(d.join("run").join(f)).unwrap();
        assert!(text.starts_with("format_version = 1"), "{f}: {text}");
    }
    for f in ["trace.csv", "reports.csv"] {
        let text = fs::read_to_string(d.join("run").join(f)).unwrap();
        assert!(text.starts_with("# format_version = 1\n"), "{f}");
    }
    let report = moci(d, &["--out", "run", "report"]);
    ok(&report);
    let table = String::from_utf8(report.stdout).unwrap();
    assert!(table.contains("| moci | 1 |"), "{table}");
    assert!(table.contains("literature value, not reproduced"));
}

#[test]
fn same_seed_same_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&moci(d, &["--out", "a", "gen-env", "--random", "--n", "6", "--seed", "9"]));
    ok(&moci(d, &["--out", "a", "--seed", "9", "gen-demos", "--count", "8"]));
    ok(&moci(d, &["--out", "a", "--seed", "9", "infer"]));
    ok(&moci(d, &["--out", "a", "--seed", "9", "infer", "--demos", "a/demos.toml", "--env", "a/env.toml"]));
    let first = fs::read_to_string(d.join("a/model.toml")).unwrap();
    ok(&moci(d, &["--out", "a", "--seed", "9", "infer"]));
    assert_eq!(first, fs::read_to_string(d.join("a/model.toml")).unwrap());
}

#[test]
fn out_dir_from_environment_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_moci"))
        .current_dir(d)
        .env("MOCI_OUT_DIR", "from-env")
        .args(["gen-env"])
        .output()
        .unwrap();
    ok(&out);
    assert!(d.join("from-env/env.toml").exists());

    fs::write(d.join("spec.toml"), "format_version = 1\noutputs = \"from-config\"\n[env]\npreset = \"paper-6x6\"\n").unwrap();
    ok(&moci(d, &["--config", "spec.toml", "gen-env"]));
    assert!(fs::read_to_string(d.join("from-config/env.toml")).unwrap().contains("n = 6"));
}

#[test]
fn sweep_resumes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = r#"
format_version = 1
[inference]
max_iterations = 2
irl_steps = 5
[sweep]
demo_counts = [2, 4]
seed_count = 2
methods = ["moci", "mlci"]
"#;
    fs::write(d.join("spec.toml"), spec).unwrap();
    let first = moci(d, &["--config", "spec.toml", "--out", "sw", "--jobs", "2", "sweep"]);
    ok(&first);
    assert!(String::from_utf8_lossy(&first.stderr).contains("4 cells computed, 0 reused"));
    let again = moci(d, &["--config", "spec.toml", "--out", "sw", "sweep"]);
    ok(&again);
    assert!(String::from_utf8_lossy(&again.stderr).contains("0 cells computed, 4 reused"));
    for f in ["results.csv", "summary.csv", "fpr_vs_demos.csv", "fpr_vs_grid.csv", "runtime_vs_grid.csv", "ablation.csv"] {
        assert!(fs::read_to_string(d.join("sw").join(f)).unwrap().starts_with("# format_version = 1"), "{f}");
    }
    ok(&moci(d, &["--out", "sw", "report"]));
    assert!(d.join("sw/comparison.md").exists());
}

#[test]
fn usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(moci(d, &["infer", "--method", "nope"]).status.code(), Some(2));
    assert_eq!(moci(d, &["gen-env", "--n", "5"]).status.code(), Some(2));
    assert_eq!(moci(d, &["--out", "empty", "report"]).status.code(), Some(2));

    fs::create_dir(d.join("v2")).unwrap();
    fs::write(d.join("v2/env.toml"), "format_version = 2\n").unwrap();
    let out = moci(d, &["--out", "v2", "gen-demos"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("format version 2"));

    fs::write(d.join("bad.toml"), "format_version = 1\n[inference]\nthreshhold = 0.1\n").unwrap();
    let out = moci(d, &["--config", "bad.toml", "gen-env"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshhold"));
}
