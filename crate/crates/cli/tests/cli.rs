//! CLI behavior: staged subcommands compose into the same run as the
//! one-shot `run`, output locking, exit codes, and idempotent reporting.

use std::path::Path;
use std::process::Command;

fn nids(cwd: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nids"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("nids runs")
}

fn make_synth(cwd: &Path) {
    let out = nids(
        cwd,
        &[
            "synth",
            "synth.csv",
            "--counts",
            "150,80",
            "--informative",
            "2",
            "--noise",
            "2",
            "--synth-seed",
            "3",
        ],
    );
    assert!(out.status.success());
}

const COMMON: &[&str] = &[
    "--data",
    "synth.csv",
    "--kind",
    "generic",
    "--task",
    "binary",
    "--seed",
    "9",
    "--folds",
    "3",
    "--select-folds",
    "2",
    "--threshold",
    "0.9",
    "--early-exit",
    "--learners",
    "rf,dt",
];

#[test]
fn staged_subcommands_match_one_shot_run() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());

    let mut run_args = vec!["run", "--out", "one-shot"];
    run_args.extend_from_slice(COMMON);
    let out = nids(dir.path(), &run_args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    for stage in ["ingest", "balance", "rank", "select", "evaluate"] {
        let mut args = vec![stage, "--out", "staged"];
        args.extend_from_slice(COMMON);
        let out = nids(dir.path(), &args);
        assert!(
            out.status.success(),
            "stage {stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    let a = std::fs::read(dir.path().join("one-shot/metrics.csv")).unwrap();
    let b = std::fs::read(dir.path().join("staged/metrics.csv")).unwrap();
    assert_eq!(a, b, "staged and one-shot metrics differ");

    let ea = std::fs::read(dir.path().join("one-shot/eval.json")).unwrap();
    let eb = std::fs::read(dir.path().join("staged/eval.json")).unwrap();
    assert_eq!(ea, eb, "staged and one-shot eval reports differ");
}

#[test]
fn report_regenerates_identical_csvs_without_retraining() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());
    let mut run_args = vec!["run", "--out", "out"];
    run_args.extend_from_slice(COMMON);
    assert!(nids(dir.path(), &run_args).status.success());

    let metrics = dir.path().join("out/metrics.csv");
    let original = std::fs::read(&metrics).unwrap();
    std::fs::remove_file(&metrics).unwrap();

    let mut report_args = vec!["report", "--out", "out"];
    report_args.extend_from_slice(COMMON);
    let out = nids(dir.path(), &report_args);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&metrics).unwrap(), original);
}

#[test]
fn missing_upstream_artifact_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());
    let mut args = vec!["select", "--out", "out"];
    args.extend_from_slice(COMMON);
    let out = nids(dir.path(), &args);
    assert_eq!(out.status.code(), Some(3), "data error exit code");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run the"), "{err}");
}

#[test]
fn config_errors_exit_2_data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());

    // invalid threshold -> config error before any work
    let out = nids(
        dir.path(),
        &[
            "run", "--out", "out", "--data", "synth.csv", "--kind", "generic", "--threshold",
            "1.5",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("select.threshold"));

    // unknown learner -> config error
    let out = nids(
        dir.path(),
        &[
            "run", "--out", "out", "--data", "synth.csv", "--kind", "generic", "--learners",
            "rf,svm",
        ],
    );
    assert_eq!(out.status.code(), Some(2));

    // missing input file -> data error
    let out = nids(
        dir.path(),
        &["ingest", "--out", "out", "--data", "nope.csv", "--kind", "generic"],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn locked_output_directory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());
    std::fs::create_dir_all(dir.path().join("out")).unwrap();
    std::fs::write(dir.path().join("out/.nids.lock"), b"").unwrap();
    let mut args = vec!["ingest", "--out", "out"];
    args.extend_from_slice(COMMON);
    let out = nids(dir.path(), &args);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("locked"), "{err}");
}

#[test]
fn failed_stage_leaves_a_stale_marker() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());
    // ingest succeeds, then a bad malmem parse fails the next ingest
    let mut args = vec!["ingest", "--out", "out"];
    args.extend_from_slice(COMMON);
    assert!(nids(dir.path(), &args).status.success());
    assert!(!dir.path().join("out/STALE").exists());

    let out = nids(
        dir.path(),
        &[
            "ingest", "--out", "out", "--data", "synth.csv", "--kind", "malmem",
        ],
    );
    assert!(!out.status.success());
    let marker = std::fs::read_to_string(dir.path().join("out/STALE")).unwrap();
    assert!(marker.contains("ingest"), "{marker}");

    // a subsequent successful stage clears the marker
    let mut args = vec!["ingest", "--out", "out"];
    args.extend_from_slice(COMMON);
    assert!(nids(dir.path(), &args).status.success());
    assert!(!dir.path().join("out/STALE").exists());
}

#[test]
fn synth_is_deterministic_and_config_file_works() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());
    let first = std::fs::read(dir.path().join("synth.csv")).unwrap();
    make_synth(dir.path());
    assert_eq!(first, std::fs::read(dir.path().join("synth.csv")).unwrap());

    // a config file drives the run; flags still override
    std::fs::write(
        dir.path().join("nids.toml"),
        r#"
[input]
kind = "generic"
path = "synth.csv"
task = "binary"

[run]
out_dir = "cfg-out"
seed = 9

[select]
threshold = 0.9
early_exit = true
folds = 2
learners = ["dt"]

[eval]
folds = 3
learners = ["dt"]
"#,
    )
    .unwrap();
    let out = nids(dir.path(), &["run", "--config", "nids.toml"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("cfg-out/metrics.csv").exists());

    // manifest lists every emitted file with a hash
    let manifest: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("cfg-out/manifest.json")).unwrap(),
    )
    .unwrap();
    let files = manifest["files"].as_object().unwrap();
    for artifact in [
        "prepared.bin",
        "balanced.bin",
        "ranking.json",
        "selection.json",
        "eval.json",
        "metrics.csv",
    ] {
        assert!(files.contains_key(artifact), "manifest missing {artifact}");
        let hash = files[artifact].as_str().unwrap();
        assert_eq!(hash.len(), 64, "{artifact} hash");
    }
}

#[test]
fn train_subcommand_writes_a_model_envelope() {
    let dir = tempfile::tempdir().unwrap();
    make_synth(dir.path());
    for stage in ["ingest", "balance", "rank", "select"] {
        let mut args = vec![stage, "--out", "out"];
        args.extend_from_slice(COMMON);
        assert!(nids(dir.path(), &args).status.success());
    }
    let mut args = vec!["train", "--learner", "gb", "--out", "out"];
    args.extend_from_slice(COMMON);
    let out = nids(dir.path(), &args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let model: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("out/model_gb.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(model["format"], "nids-model");
    assert_eq!(model["version"], 1);
    assert_eq!(model["payload"]["learner"], "gb");
}
