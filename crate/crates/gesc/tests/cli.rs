use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gesc::load_bundle;
use gesc_core::graph::global_homophily;
use tempfile::tempdir;

fn gesc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gesc")).args(args).env("GESC_THREADS", "1").output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "status {:?}\n{}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, nodes: &str, dim: &str, homophily: &str) {
    ok(&gesc(&["gen-synth", "--out", s(dir), "--nodes", nodes, "--feature-dim", dim, "--homophily", homophily, "--seed", "4"]));
}

const SMALL: [&str; 8] = ["--dim", "4", "--heads", "1", "--layers", "1", "--lr", "0.01"];

fn train(bundle: &Path, out: &Path, epochs: &str) -> String {
    let mut args = vec!["train", "--bundle", s(bundle), "--out", s(out), "--epochs", epochs, "--seed", "2"];
    args.extend(SMALL);
    ok(&gesc(&args))
}

#[test]
fn gen_synth_round_trips_at_the_requested_homophily() {
    let dir = tempdir().unwrap();
    let b = dir.path().join("b");
    gen(&b, "1000", "8", "0.3");
    let data = load_bundle(&b).unwrap();
    assert_eq!(data.num_nodes(), 1000);
    assert_eq!(data.feature_dim, 8);
    let h = global_homophily(&data).unwrap();
    assert!((h - 0.3).abs() <= 0.05, "homophily {h}");
}

#[test]
fn train_logs_every_epoch_and_reruns_identically() {
    let dir = tempdir().unwrap();
    let b = dir.path().join("b");
    gen(&b, "120", "6", "0.2");
    let (r1, r2) = (dir.path().join("r1"), dir.path().join("r2"));
    train(&b, &r1, "50");
    train(&b, &r2, "50");
    let log = fs::read_to_string(r1.join("metrics.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 50);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["epoch"].is_u64() && v["val_acc"].is_f64());
    }
    for f in ["metrics.jsonl", "checkpoint.gesc", "config.json", "summary.json"] {
        assert_eq!(fs::read(r1.join(f)).unwrap(), fs::read(r2.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn eval_is_repeatable_and_checks_dimensions() {
    let dir = tempdir().unwrap();
    let b = dir.path().join("b");
    gen(&b, "120", "6", "0.2");
    let run = dir.path().join("run");
    train(&b, &run, "5");
    let ckpt = run.join("checkpoint.gesc");
    let eval = |bundle: &Path| gesc(&["eval", "--checkpoint", s(&ckpt), "--bundle", s(bundle), "--mask", "all", "--seed", "2"]);
    let first = ok(&eval(&b));
    assert!(first.starts_with("accuracy (all): "), "{first}");
    assert_eq!(first, ok(&eval(&b)));

    let other = dir.path().join("other");
    gen(&other, "120", "5", "0.2");
    assert_eq!(eval(&other).status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempdir().unwrap();
    let missing = dir.path().join("missing");
    let out = gesc(&["train", "--bundle", s(&missing), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(gesc(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(gesc(&["train", "--content", "a.content"]).status.code(), Some(2));
    assert_eq!(gesc(&["train", "--eta-sic", "1.5", "--out", s(&dir.path().join("o"))]).status.code(), Some(2));
}

#[test]
fn bounds_suite_passes_and_writes_reports() {
    let dir = tempdir().unwrap();
    let out = ok(&gesc(&["verify", "bounds", "--bound-trials", "50", "--out", s(dir.path())]));
    assert!(out.lines().all(|l| l.starts_with("pass")), "{out}");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("sic_self_energy.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["hard"], true);
}

#[test]
fn verify_output_is_byte_identical_across_runs() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&gesc(&["verify", "gauge", "--trials", "3", "--dim", "4", "--heads", "2", "--out", s(d)]));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn same_seed_gives_identical_bundle() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    gen(&a, "150", "4", "0.5");
    gen(&b, "150", "4", "0.5");
    for f in ["manifest.json", "features.bin", "edges.csv", "labels.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn memorized_training_set_evaluates_to_one() {
    let dir = tempdir().unwrap();
    let b = dir.path().join("b");
    ok(&gesc(&["gen-synth", "--out", s(&b), "--nodes", "60", "--feature-dim", "4", "--homophily", "0.9", "--signal", "1", "--seed", "1"]));
    let run = dir.path().join("run");
    ok(&gesc(&[
        "train", "--bundle", s(&b), "--out", s(&run), "--epochs", "150", "--lr", "0.05", "--dim", "8", "--heads", "1", "--layers", "1", "--seed", "0",
    ]));
    let ckpt = run.join("checkpoint.gesc");
    let out = ok(&gesc(&["eval", "--checkpoint", s(&ckpt), "--bundle", s(&b), "--mask", "train", "--seed", "0"]));
    assert_eq!(out.trim(), "accuracy (train): 1.000000");
}

#[test]
fn config_snapshot_reproduces_the_run() {
    let dir = tempdir().unwrap();
    let b = dir.path().join("b");
    gen(&b, "100", "5", "0.3");
    let first = dir.path().join("first");
    train(&b, &first, "12");
    let again = dir.path().join("again");
    ok(&gesc(&["train", "--config", s(&first.join("config.json")), "--out", s(&again)]));
    for f in ["metrics.jsonl", "checkpoint.gesc", "config.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn verify_all_writes_every_suite() {
    let dir = tempdir().unwrap();
    let b = dir.path().join("b");
    gen(&b, "80", "4", "0.3");
    let out = gesc(&[
        "verify", "all", "--bundle", s(&b), "--trials", "2", "--bound-trials", "20", "--pairs", "2", "--depth", "2", "--depths", "1,2", "--seeds",
        "1", "--epochs", "3", "--dim", "4", "--heads", "1", "--out", s(&dir.path().join("v")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = fs::read_dir(dir.path().join("v")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().filter(|n| n.ends_with(".json")).count() >= 6, "{names:?}");
    for csv in ["notch.csv", "depth.csv", "sic_grid.csv"] {
        assert!(names.iter().any(|n| n == csv), "{csv} missing from {names:?}");
    }
}
