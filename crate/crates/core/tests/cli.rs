use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nidsgan::synth::{generate, SurrogateConfig};

fn nidsgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nidsgan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(dir: &Path, dataset: &str, extra: &str) -> PathBuf {
    let p = dir.join("pipeline.toml");
    std::fs::write(
        &p,
        format!("seed = 5\n\n[paths]\ndataset = \"{dataset}\"\nout = \"out\"\n\n[gbt]\nn_rounds = 8\nmax_depth = 3\n{extra}"),
    )
    .unwrap();
    p
}

fn surrogate(dir: &Path, rows: usize) {
    let text = generate(&SurrogateConfig {
        rows,
        ..SurrogateConfig::default()
    });
    std::fs::write(dir.join("data.txt"), text).unwrap();
}

#[test]
fn missing_config_flag_exits_2() {
    let o = nidsgan(&["ingest"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn missing_config_file_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nope.toml");
    let o = nidsgan(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.toml"), "{}", stderr(&o));
}

#[test]
fn missing_dataset_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "absent.txt", "");
    let o = nidsgan(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.txt"), "{}", stderr(&o));
}

#[test]
fn train_before_ingest_is_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    surrogate(dir.path(), 300);
    let cfg = config(dir.path(), "data.txt", "");
    let o = nidsgan(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_rows_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("data.txt"), "0,tcp,http,SF,1,2\n").unwrap();
    let cfg = config(dir.path(), "data.txt", "");
    let o = nidsgan(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    surrogate(dir.path(), 300);
    let cfg = config(dir.path(), "data.txt", "\n[isoforest]\ntress = 10\n");
    let o = nidsgan(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tress"), "{}", stderr(&o));
}

#[test]
fn ingest_train_anomaly_succeed_and_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    surrogate(dir.path(), 1200);
    let cfg = config(dir.path(), "data.txt", "");
    let cfg = cfg.to_str().unwrap();
    for args in [&["ingest", "--config", cfg][..], &["train", "--config", cfg], &["anomaly", "--config", cfg]] {
        let o = nidsgan(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
    let out = dir.path().join("out");
    for name in [
        "dataset-clean.csv",
        "class-distribution.csv",
        "model-baseline.json",
        "metrics-baseline.txt",
        "confusion-baseline.csv",
        "anomaly-ranking.csv",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
}

#[test]
fn out_and_seed_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    surrogate(dir.path(), 900);
    let cfg = config(dir.path(), "data.txt", "");
    let cfg = cfg.to_str().unwrap();
    let run = |out: &str, seed: &str| {
        let out = dir.path().join(out);
        let o = out.to_str().unwrap();
        for cmd in ["ingest", "train"] {
            let r = nidsgan(&[cmd, "--config", cfg, "--out", o, "--seed", seed]);
            assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
        }
        std::fs::read(out.join("split.json")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "2");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(!dir.path().join("out").exists());
}
