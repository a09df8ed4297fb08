use std::path::Path;
use std::process::{Command, Output};

use modeconv::anomaly::roc_auc;

const SPEC: &str = r#"{"node_count": 4, "mass": 1.0, "stiffness": 20000.0, "damping_ratio": 0.02,
    "damage": [{"first_node": 0, "last_node": 3, "factor": 0.5, "onset": 14.0}],
    "excitation": {"noise_std": 1.0}, "sample_rate": 128.0, "duration": 20.0, "warmup": 2.0,
    "channels": ["strain"], "seed": 2, "window_length": 16, "stride": 16}"#;

const CFG: &str =
    r#"{"window_length": 16, "stride": 16, "epochs": 4, "batch_size": 32, "seed": 1}"#;

fn modeconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modeconv"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes the spec and config, simulates, and returns the manifest path.
fn dataset(dir: &Path) -> std::path::PathBuf {
    std::fs::write(dir.join("spec.json"), SPEC).unwrap();
    std::fs::write(dir.join("cfg.json"), CFG).unwrap();
    let out = modeconv(&[
        "simulate",
        "--config",
        p(&dir.join("spec.json")),
        "--out",
        p(&dir.join("data")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    dir.join("data/manifest.json")
}

fn train(dir: &Path, manifest: &Path, out: &str, extra: &[&str]) -> Output {
    let (cfg, out_dir) = (dir.join("cfg.json"), dir.join(out));
    let mut args = vec!["train", "--manifest", p(manifest), "--config", p(&cfg)];
    args.extend(["--out", p(&out_dir)]);
    args.extend(extra);
    modeconv(&args)
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn simulate_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let m: serde_json::Value = serde_json::from_str(&read(&manifest)).unwrap();
    assert_eq!(m["labels"].as_array().unwrap().len(), 160);
    assert!(dir.path().join("data/node3_strain.bin").exists());
}

#[test]
fn malformed_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, SPEC.replace("\"stiffness\"", "\"stifness\"")).unwrap();
    let out = modeconv(&[
        "simulate",
        "--config",
        p(&path),
        "--out",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stifness"));

    std::fs::write(&path, SPEC.replace("\"factor\": 0.5", "\"factor\": -0.5")).unwrap();
    let out = modeconv(&[
        "simulate",
        "--config",
        p(&path),
        "--out",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("damage[0].factor"));
}

#[test]
fn simulate_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    dataset(a.path());
    dataset(b.path());
    for name in [
        "manifest.json",
        "regimes.json",
        "node0_strain.bin",
        "node3_strain.bin",
    ] {
        assert_eq!(
            std::fs::read(a.path().join("data").join(name)).unwrap(),
            std::fs::read(b.path().join("data").join(name)).unwrap()
        );
    }
    let out = modeconv(&[
        "simulate",
        "--config",
        p(&a.path().join("spec.json")),
        "--out",
        p(&a.path().join("other")),
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    assert_ne!(
        std::fs::read(a.path().join("data/node0_strain.bin")).unwrap(),
        std::fs::read(a.path().join("other/node0_strain.bin")).unwrap()
    );
}

#[test]
fn single_epoch_writes_checkpoint_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let out = train(dir.path(), &manifest, "run", &["--epochs", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("run/checkpoint.json").exists());
    assert_eq!(
        read(dir.path().join("run/loss_history.csv"))
            .lines()
            .count(),
        2
    );
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    assert!(train(dir.path(), &manifest, "full", &[]).status.success());
    assert!(train(dir.path(), &manifest, "half", &["--epochs", "2"])
        .status
        .success());
    let ck = dir.path().join("half/checkpoint.json");
    let out = train(dir.path(), &manifest, "rest", &["--resume", p(&ck)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        read(dir.path().join("rest/loss_history.csv"))
            .lines()
            .count(),
        5
    );
    assert_eq!(
        read(dir.path().join("full/checkpoint.json")),
        read(dir.path().join("rest/checkpoint.json"))
    );
    assert_eq!(
        read(dir.path().join("full/loss_history.csv")),
        read(dir.path().join("rest/loss_history.csv"))
    );
}

#[test]
fn resume_rejects_a_different_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    assert!(train(dir.path(), &manifest, "a", &["--epochs", "1"])
        .status
        .success());
    let ck = dir.path().join("a/checkpoint.json");
    let out = train(
        dir.path(),
        &manifest,
        "b",
        &["--resume", p(&ck), "--seed", "5"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn frozen_layer_keeps_its_initial_weights() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    assert!(train(dir.path(), &manifest, "zero", &["--epochs", "0"])
        .status
        .success());
    assert!(train(
        dir.path(),
        &manifest,
        "frozen",
        &["--epochs", "2", "--freeze", "0,5"]
    )
    .status
    .success());
    let layers = |dir: &str| -> serde_json::Value {
        let ck: serde_json::Value =
            serde_json::from_str(&read(Path::new(dir).join("checkpoint.json"))).unwrap();
        ck["params"]["layers"].clone()
    };
    let (a, b) = (
        layers(p(&dir.path().join("zero"))),
        layers(p(&dir.path().join("frozen"))),
    );
    assert_eq!(a[0], b[0]);
    assert_eq!(a[5], b[5]);
    assert_ne!(a[1], b[1]);
}

#[test]
fn bad_manifest_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = modeconv(&[
        "train",
        "--manifest",
        p(&dir.path().join("nope.json")),
        "--out",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_string())
        .collect()
}

#[test]
fn eval_reports_agree_with_emitted_scores() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    assert!(train(dir.path(), &manifest, "run", &[]).status.success());
    let run = dir.path().join("run");
    let ck = run.join("checkpoint.json");
    for kind in ["l1", "mahalanobis"] {
        let out = modeconv(&[
            "eval",
            "--checkpoint",
            p(&ck),
            "--manifest",
            p(&manifest),
            "--out",
            p(&run),
            "--threshold",
            kind,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (l1, maha) = (
        read(run.join("scores_l1.csv")),
        read(run.join("scores_mahalanobis.csv")),
    );
    assert_eq!(
        column(&l1, "reconstruction_error"),
        column(&maha, "reconstruction_error")
    );
    assert_eq!(column(&l1, "window"), column(&maha, "window"));

    for kind in ["l1", "mahalanobis"] {
        let scores_csv = read(run.join(format!("scores_{kind}.csv")));
        let summary = read(run.join(format!("report_{kind}.csv")));
        let get = |name: &str| column(&summary, name)[0].parse::<f64>().unwrap();
        let scores: Vec<f64> = column(&scores_csv, "score")
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let truth: Vec<bool> = column(&scores_csv, "label")
            .iter()
            .map(|s| s == "1")
            .collect();
        let threshold = get("threshold");
        let flags: Vec<bool> = scores.iter().map(|s| *s > threshold).collect();
        assert_eq!(
            flags,
            column(&scores_csv, "flag")
                .iter()
                .map(|s| s == "1")
                .collect::<Vec<_>>()
        );
        let count = |f: bool, t: bool| {
            flags
                .iter()
                .zip(&truth)
                .filter(|(a, b)| **a == f && **b == t)
                .count() as f64
        };
        let (tp, fp, tn, fneg) = (
            count(true, true),
            count(true, false),
            count(false, false),
            count(false, true),
        );
        assert_eq!(get("true_positives"), tp);
        assert_eq!(get("false_positives"), fp);
        assert_eq!(get("true_negatives"), tn);
        assert_eq!(get("false_negatives"), fneg);
        let recall = tp / (tp + fneg);
        let specificity = tn / (tn + fp);
        assert!((get("recall") - recall).abs() < 1e-12);
        assert!((get("balanced_accuracy") - (recall + specificity) / 2.0).abs() < 1e-12);
        if tp > 0.0 {
            let precision = tp / (tp + fp);
            assert!((get("precision") - precision).abs() < 1e-12);
            assert!((get("f1") - 2.0 * precision * recall / (precision + recall)).abs() < 1e-12);
        }
        assert!((get("auc") - roc_auc(&scores, &truth).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn eval_with_cheb_and_laplace_layers() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    for layer in ["cheb", "laplace"] {
        let out = train(
            dir.path(),
            &manifest,
            layer,
            &["--layer", layer, "--epochs", "2"],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let run = dir.path().join(layer);
        let out = modeconv(&[
            "eval",
            "--checkpoint",
            p(&run.join("checkpoint.json")),
            "--manifest",
            p(&manifest),
            "--out",
            p(&run),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn bench_reports_fully_connected_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = modeconv(&[
        "bench",
        "--sizes",
        "64",
        "--repetitions",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert!(out.status.success());
    let csv = read(dir.path().join("bench.csv"));
    for edges in column(&csv, "edges") {
        assert_eq!(edges, "2016");
    }
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("bench.json"))).unwrap();
    for row in report["rows"].as_array().unwrap() {
        assert!(row["seconds_per_forward"].as_f64().unwrap() > 0.0);
        assert_eq!(row["multiply_adds"], row["multiply_adds_analytic"]);
    }
}

#[test]
fn cheb_cost_grows_linearly_in_filter_size() {
    let counts: Vec<f64> = (2..=8)
        .map(|k| {
            let dir = tempfile::tempdir().unwrap();
            let k = k.to_string();
            let out = modeconv(&[
                "bench",
                "--sizes",
                "32",
                "--kinds",
                "cheb",
                "--cheb-size",
                &k,
                "--repetitions",
                "1",
                "--out",
                p(dir.path()),
            ]);
            assert!(out.status.success());
            column(&read(dir.path().join("bench.csv")), "multiply_adds")[0]
                .parse()
                .unwrap()
        })
        .collect();
    let step = counts[2] - counts[1];
    for w in counts[1..].windows(2) {
        assert_eq!(w[1] - w[0], step);
    }
}

#[test]
fn invalid_bench_arguments_are_validation_errors() {
    let out = modeconv(&["bench", "--sizes", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
