//! Binary-level checks: exit codes, config handling, seed precedence and
//! output determinism.

use std::path::Path;
use std::process::Command;

fn driftlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_driftlab"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn invalid_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"experiment": "sweep", "nonsense": true}"#).unwrap();
    let out = driftlab()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nonsense"), "{stderr}");
    // parse errors carry line/column positions
    std::fs::write(&cfg, "{\n  \"experiment\": \"sweep\",\n  oops\n}").unwrap();
    let out = driftlab()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn missing_required_field_exits_2() {
    let out = driftlab().args(["sweep", "--mode", "single"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn io_failure_exits_1() {
    let out = driftlab()
        .args(["drift", "--executor", "/nonexistent/agent.json", "--out", "/tmp/driftlab-io-test"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn subcommand_config_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "sweep", "mode": "single", "resolution": 5}"#,
    )
    .unwrap();
    let out = driftlab()
        .args(["flow", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_preset_exits_2() {
    let out = driftlab().args(["preset", "no-such-preset"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_show_round_trips() {
    let out = driftlab()
        .args(["preset", "prop1-grid", "--show", "--seed", "9"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = driftlab_cli::ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(parsed.master_seed, 9);
    assert_eq!(parsed.resolution, Some(101));
    // serialize -> parse -> equal
    let again = driftlab_cli::ExperimentConfig::from_json(&parsed.to_json()).unwrap();
    assert_eq!(parsed, again);
}

#[test]
fn env_seed_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out_name: &str, env: Option<&str>| {
        let out_dir = dir.path().join(out_name);
        let mut cmd = driftlab();
        cmd.args([
            "sgd",
            "--mode",
            "single",
            "--sigma0",
            "0.6",
            "--lambda0",
            "0.6",
            "--episodes",
            "640",
            "--n-seeds",
            "1",
            "--seed",
            "1",
            "--out",
        ])
        .arg(&out_dir);
        if let Some(seed) = env {
            cmd.env("DRIFTLAB_SEED", seed);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        read(&out_dir, "sgd_seed0.csv")
    };
    let with_flag = run("a", None);
    let with_env = run("b", Some("2"));
    let with_env_again = run("c", Some("2"));
    assert_ne!(with_flag, with_env, "env seed must override --seed");
    assert_eq!(with_env, with_env_again);

    let out = driftlab()
        .args(["sweep", "--mode", "single", "--resolution", "3"])
        .env("DRIFTLAB_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut contents = Vec::new();
    for (name, jobs) in [("j1", "1"), ("j4", "4")] {
        let out_dir = dir.path().join(name);
        let out = driftlab()
            .args(["sweep", "--mode", "single", "--resolution", "15", "--seed", "7", "--jobs", jobs, "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        contents.push(read(&out_dir, "sweep.csv"));
    }
    assert_eq!(contents[0], contents[1]);
}

#[test]
fn manifest_accompanies_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("flow");
    let out = driftlab()
        .args(["flow", "--mode", "single", "--sigma0", "0.3", "--lambda0", "0.9", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&read(&out_dir, "manifest.json")).unwrap();
    assert_eq!(manifest["outputs"], serde_json::json!(["flow.csv"]));
    assert!(manifest["duration_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["config"]["experiment"], "flow");
}

#[test]
fn permtest_identical_files_not_significant() {
    let dir = tempfile::tempdir().unwrap();
    let wins = dir.path().join("wins.csv");
    let mut lines = String::from("win\n");
    for i in 0..200 {
        lines.push_str(if i % 2 == 0 { "1\n" } else { "0\n" });
    }
    std::fs::write(&wins, &lines).unwrap();
    let out_dir = dir.path().join("pt");
    let out = driftlab()
        .args(["permtest", "--n-perm", "10000", "--a"])
        .arg(&wins)
        .arg("--b")
        .arg(&wins)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_str(&read(&out_dir, "permtest.json")).unwrap();
    assert!(result["p_value"].as_f64().unwrap() >= 0.5);
}

#[test]
fn rts_pipeline_via_files() {
    // bc -> train -> eval -> drift, passing agents through JSON files
    let dir = tempfile::tempdir().unwrap();
    let bc_dir = dir.path().join("bc");
    let out = driftlab()
        .args(["rts-bc", "--variant", "Original", "--bc-n", "800", "--out"])
        .arg(&bc_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let train_dir = dir.path().join("train");
    let out = driftlab()
        .args(["rts-train", "--mode", "single", "--variant", "Original", "--episodes-per-env", "2048"])
        .arg("--instructor")
        .arg(bc_dir.join("bc_instructor.json"))
        .arg("--executor")
        .arg(bc_dir.join("bc_executor.json"))
        .arg("--out")
        .arg(&train_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&train_dir, "manifest.json")).unwrap();
    assert_eq!(manifest["budget"]["Original"], 2048);
    assert!(read(&train_dir, "train_log.csv").starts_with("episode,variant,win,reward,diag_mass"));

    let eval_dir = dir.path().join("eval");
    let out = driftlab()
        .args(["rts-eval", "--variant", "Original", "--n-games", "500"])
        .arg("--instructor")
        .arg(train_dir.join("instructor.json"))
        .arg("--executor")
        .arg(train_dir.join("executor.json"))
        .arg("--out")
        .arg(&eval_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eval: serde_json::Value = serde_json::from_str(&read(&eval_dir, "eval.json")).unwrap();
    assert!(eval["win_rate"].as_f64().unwrap() > 0.5);

    let drift_dir = dir.path().join("drift");
    let out = driftlab()
        .args(["drift", "--n-samples", "5000"])
        .arg("--executor")
        .arg(train_dir.join("executor.json"))
        .arg("--out")
        .arg(&drift_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&drift_dir, "drift_matrix.csv").starts_with("message,swordman"));
}
