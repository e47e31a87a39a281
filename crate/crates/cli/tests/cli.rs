//! End-to-end checks of the command-line surface: subcommands, output
//! files, reproducibility, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppgame"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        "[game]\nnum_dos = 4\nmax_iterations = 300\nmaster_seed = 11\n",
    )
    .unwrap();
    path
}

#[test]
fn print_config_shows_defaults_and_overrides() {
    let out = run_ok(&["print-config"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("num_dos = 100"));
    assert!(text.contains("max_iterations = 20000"));
    assert!(text.contains("do_scheme = \"wolf-phc\""));

    let out = run_ok(&[
        "print-config",
        "--seed",
        "9",
        "--iterations",
        "50",
        "--scheme",
        "greedy",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("master_seed = 9"));
    assert!(text.contains("max_iterations = 50"));
    assert!(text.contains("do_scheme = \"greedy\""));
    assert!(text.contains("curator_scheme = \"greedy\""));
}

#[test]
fn run_writes_all_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    for name in [
        "trace.csv",
        "summary.json",
        "snapshot.json",
        "resolved_config.toml",
        "manifest.json",
    ] {
        assert!(out_a.join(name).exists(), "{name} missing");
    }
    let trace_a = std::fs::read(out_a.join("trace.csv")).unwrap();
    let trace_b = std::fs::read(out_b.join("trace.csv")).unwrap();
    assert_eq!(
        trace_a, trace_b,
        "same config and seed must reproduce the trace"
    );

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 11);
    assert_eq!(manifest["output_paths"].as_array().unwrap().len(), 4);
}

#[test]
fn seed_override_changes_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_ok(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]);
    run_ok(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "12",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    let trace_a = std::fs::read(out_a.join("trace.csv")).unwrap();
    let trace_b = std::fs::read(out_b.join("trace.csv")).unwrap();
    assert_ne!(trace_a, trace_b, "different seeds should diverge");
}

#[test]
fn verify_ne_reports_on_a_finished_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("run");
    run_ok(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let verify = run_ok(&["verify-ne", "--out", out.to_str().unwrap()]);
    let text = String::from_utf8(verify.stdout).unwrap();
    assert!(
        text.contains("exploitability epsilon"),
        "unexpected output: {text}"
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ne_report.json")).unwrap())
            .unwrap();
    assert!(report["epsilon"].as_f64().unwrap() >= 0.0);
}

#[test]
fn compare_writes_per_scheme_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("cmp");
    run_ok(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    for name in [
        "trace-wolf-phc.csv",
        "trace-q-learning.csv",
        "trace-greedy.csv",
        "compare.json",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
    let results = results.as_array().unwrap();
    assert_eq!(results.len(), 3);
    let digest = results[0]["population_digest"].as_str().unwrap();
    for r in results {
        assert_eq!(r["population_digest"].as_str().unwrap(), digest);
    }
}

#[test]
fn exit_codes_distinguish_config_and_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();

    // Missing config file: configuration error.
    let out = bin()
        .args(["run", "--config", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Invalid field value: configuration error.
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grids]\nprice_intervals = 0\n").unwrap();
    let out = bin()
        .args(["print-config", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Unknown scheme name: configuration error.
    let out = bin().args(["run", "--scheme", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Verifying a directory without a finished run: runtime error.
    let out = bin()
        .args(["verify-ne", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
