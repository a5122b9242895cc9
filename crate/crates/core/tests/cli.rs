use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqnncs"))
        .args(args)
        .env_remove("IQNNCS_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn short_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{"training": {"epochs": 12, "patience": 12}, "synth": {"n_per_class": 40}, "interpret": {"instances": [0, 3], "tsne": {"iterations": 300}}}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_train_evaluate_reaches_high_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["--out", out, "synth"]);
    ok(&["--out", out, "train"]);
    fs::remove_file(dir.path().join("metrics.json")).unwrap();
    ok(&["--out", out, "evaluate"]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert!(m["accuracy"].as_f64().unwrap() >= 0.95, "{m}");
    let confusion = fs::read_to_string(dir.path().join("confusion.csv")).unwrap();
    assert!(confusion.starts_with("true\\predicted,Low,Average,High\n"));
}

#[test]
fn explain_icaa_instance_writes_symmetric_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = short_config(dir.path());
    ok(&["--config", &cfg, "--out", out, "synth"]);
    ok(&["--config", &cfg, "--out", out, "train"]);
    ok(&["--config", &cfg, "--out", out, "explain", "--method", "icaa", "--instance", "7"]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("icaa_7.json")).unwrap()).unwrap();
    let m = doc["matrix"]["values"].as_array().unwrap();
    assert_eq!(m.len(), 3);
    for i in 0..3 {
        assert_eq!(m[i].as_array().unwrap().len(), 3);
        assert!((m[i][i].as_f64().unwrap() - 1.0).abs() < 1e-10);
        for j in 0..3 {
            assert!((m[i][j].as_f64().unwrap() - m[j][i].as_f64().unwrap()).abs() < 1e-10);
        }
    }
    assert!(dir.path().join("icaa_7.svg").exists());
    assert!(!dir.path().join("occlusion_7.csv").exists());

    let bad = cli(&["--config", &cfg, "--out", out, "explain", "--instance", "100000"]);
    assert_eq!(bad.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
}

#[test]
fn report_is_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let runs: Vec<_> = ["a", "b"].iter().map(|r| dir.path().join(r)).collect();
    for r in &runs {
        let out = r.to_str().unwrap();
        ok(&["--config", &cfg, "--out", out, "--seed", "5", "synth"]);
        ok(&["--config", &cfg, "--out", out, "--seed", "5", "train"]);
        ok(&["--config", &cfg, "--out", out, "--seed", "5", "report"]);
        ok(&["--config", &cfg, "--out", out, "--seed", "5", "embed", "--perplexity", "5"]);
    }
    let mut names: Vec<String> = fs::read_dir(&runs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for expected in [
        "metrics.json",
        "history.csv",
        "confusion.csv",
        "attributions_0_saliency.csv",
        "attributions_3_ig.csv",
        "icaa_0.json",
        "icaa_3.json",
        "occlusion_3.csv",
        "prototypes_0.csv",
        "indecision.csv",
        "entropy.csv",
        "similarity.csv",
        "embedding.csv",
        "embedding.svg",
        "method_utility.csv",
    ] {
        assert!(names.iter().any(|n| n == expected), "missing {expected} in {names:?}");
    }
    for n in &names {
        assert_eq!(
            fs::read(runs[0].join(n)).unwrap(),
            fs::read(runs[1].join(n)).unwrap(),
            "{n} differs"
        );
    }
    let hist = fs::read_to_string(runs[0].join("history.csv")).unwrap();
    assert!(hist.starts_with("epoch,split,loss,acc\n1,train,"));
}

#[test]
fn seed_env_fallback_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["--out", a.to_str().unwrap(), "--seed", "11", "synth"]);
    let out = Command::new(env!("CARGO_BIN_EXE_iqnncs"))
        .args(["--out", b.to_str().unwrap(), "synth"])
        .env("IQNNCS_SEED", "11")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(a.join("data.csv")).unwrap(), fs::read(b.join("data.csv")).unwrap());
    ok(&["--out", dir.path().join("c").to_str().unwrap(), "--seed", "12", "synth"]);
    assert_ne!(fs::read(a.join("data.csv")).unwrap(), fs::read(dir.path().join("c/data.csv")).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    for args in [&["--bogus"][..], &["frobnicate"], &["explain", "--method", "nope"]] {
        let out = cli(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = cli(&["--out", out, "train"]);
    assert_eq!(missing.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert!(stderr.starts_with("error: "), "{stderr}");
    assert_eq!(stderr.trim().lines().count(), 1);

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"trainig": {}}"#).unwrap();
    assert_eq!(cli(&["--config", cfg.to_str().unwrap(), "--out", out, "synth"]).status.code(), Some(1));
}

#[test]
fn preprocess_then_mismatched_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = short_config(dir.path());
    ok(&["--config", &cfg, "--out", out, "synth"]);
    ok(&["--config", &cfg, "--out", out, "train"]);
    // refit the preprocessor with another seed: the checkpoint no longer matches
    ok(&["--config", &cfg, "--out", out, "--seed", "99", "preprocess"]);
    let r = cli(&["--config", &cfg, "--out", out, "evaluate"]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("different preprocessor"));
}

#[test]
fn bare_invocation_prints_usage_and_exits_2() {
    let out = cli(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}
