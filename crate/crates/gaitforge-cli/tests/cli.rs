//! End-to-end tests against the compiled `gaitforge` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn gaitforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitforge"))
        .args(args)
        .env_remove("GAITFORGE_OUT")
        .output()
        .expect("binary runs")
}

/// Overrides that keep a debug-build training run under a second.
const TINY: &[&str] = &[
    "--set",
    "ppo.env_count=2",
    "--set",
    "ppo.rollout_length=16",
    "--set",
    "trainer.window=8",
    "--set",
    "ppo.minibatches=1",
    "--set",
    "policy.hidden=8",
];

fn tiny_train(out: &Path, extra: &[&str]) -> Output {
    let out_str = out.to_str().unwrap();
    let mut args = vec!["train", "--set", "trainer.iterations=1", "--out", out_str];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    gaitforge(&args)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn train_smoke_writes_one_stats_row() {
    let dir = TempDir::new().unwrap();
    let out = tiny_train(dir.path(), &["--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stats = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    let lines: Vec<&str> = stats.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one data row");
    assert!(lines[0].starts_with("iteration,phase,mean_return"));
    assert!(dir.path().join("checkpoint_initial.gfpk").exists());
    assert!(dir.path().join("checkpoint_final.gfpk").exists());
    assert!(dir.path().join("resolved_config.toml").exists());
}

#[test]
fn missing_config_file_names_the_path() {
    let out = gaitforge(&["train", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/run.toml"));
}

#[test]
fn out_of_range_override_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = tiny_train(dir.path(), &["--set", "ppo.gamma=1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gamma"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = tiny_train(dir.path(), &["--set", "ppo.gamm=0.9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn truncated_checkpoint_reports_corrupt() {
    let dir = TempDir::new().unwrap();
    let train = tiny_train(dir.path(), &[]);
    assert!(train.status.success(), "{}", stderr(&train));
    let good = std::fs::read(dir.path().join("checkpoint_final.gfpk")).unwrap();
    let bad_path = dir.path().join("bad.gfpk");
    std::fs::write(&bad_path, &good[..100]).unwrap();

    let out = gaitforge(&["inspect", bad_path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("corrupt checkpoint"), "{}", stderr(&out));

    let out = gaitforge(&[
        "eval",
        "--checkpoint",
        bad_path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("corrupt checkpoint"), "{}", stderr(&out));
}

#[test]
fn resolved_config_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = tiny_train(dir.path(), &["--seed", "11"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let resolved = dir.path().join("resolved_config.toml");
    let first = std::fs::read_to_string(&resolved).unwrap();

    let dir2 = TempDir::new().unwrap();
    let out = gaitforge(&[
        "train",
        "--config",
        resolved.to_str().unwrap(),
        "--out",
        dir2.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let second = std::fs::read_to_string(dir2.path().join("resolved_config.toml")).unwrap();
    assert_eq!(first, second, "resolved config is a fixed point");
}

#[test]
fn identical_seeds_produce_identical_checkpoints() {
    let run = |seed: &str| {
        let dir = TempDir::new().unwrap();
        let out = tiny_train(dir.path(), &["--seed", seed]);
        assert!(out.status.success(), "{}", stderr(&out));
        let ckpt = dir.path().join("checkpoint_final.gfpk");
        let inspect = gaitforge(&["inspect", ckpt.to_str().unwrap()]);
        assert!(inspect.status.success());
        (
            std::fs::read(&ckpt).unwrap(),
            String::from_utf8(inspect.stdout).unwrap(),
        )
    };
    let (bytes_a, inspect_a) = run("42");
    let (bytes_b, inspect_b) = run("42");
    let (bytes_c, _) = run("43");
    assert_eq!(bytes_a, bytes_b, "same seed, same checkpoint bytes");
    assert_eq!(inspect_a, inspect_b);
    assert!(inspect_a.contains("checksum"));
    assert_ne!(bytes_a, bytes_c, "different seed, different parameters");
}

#[test]
fn eval_trace_has_required_columns() {
    let dir = TempDir::new().unwrap();
    let train = tiny_train(dir.path(), &[]);
    assert!(train.status.success(), "{}", stderr(&train));
    let ckpt = dir.path().join("checkpoint_final.gfpk");
    let out = gaitforge(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--schedule",
        "fig4",
        "--duration",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = std::fs::read_to_string(dir.path().join("eval_trace.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    for col in ["v_cmd", "v_actual", "gait_mode", "L_legs", "L_arms", "L_total"] {
        assert!(header.split(',').any(|c| c == col), "missing column {col}");
    }
}

#[test]
fn constant_schedule_yields_constant_command() {
    let dir = TempDir::new().unwrap();
    let train = tiny_train(dir.path(), &[]);
    assert!(train.status.success(), "{}", stderr(&train));
    let sched = dir.path().join("sched.csv");
    std::fs::write(&sched, "time,v_cmd\n0.0,0.0\n").unwrap();
    let out = gaitforge(&[
        "eval",
        "--checkpoint",
        dir.path().join("checkpoint_final.gfpk").to_str().unwrap(),
        "--schedule",
        sched.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = std::fs::read_to_string(dir.path().join("eval_trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let v_cmd: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v_cmd, 0.0);
    }
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["train", "--set", "trainer.iterations=0"];
    args.extend_from_slice(TINY);
    let out = Command::new(env!("CARGO_BIN_EXE_gaitforge"))
        .args(&args)
        .env("GAITFORGE_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("checkpoint_initial.gfpk").exists());
}
