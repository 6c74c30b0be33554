//! End-to-end runs of the `repairnet` binary on a synthetic corpus.

use std::path::Path;
use std::process::{Command, Output};

use repairnet_core::toy::{tiny_disc, tiny_gate_dccrn, write_corpus};

fn repairnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repairnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = repairnet(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    repairnet(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_config(dir: &Path, lr: f64, clip: Option<f64>) -> std::path::PathBuf {
    let cfg = serde_json::json!({
        "stage": 1,
        "manifest": "src/manifest.jsonl",
        "checkpoint_dir": "ckpt",
        "epochs": 1,
        "batch_size": 2,
        "segment_seconds": 0.06,
        "val_items": 2,
        "val_seconds": 0.06,
        "max_steps": 2,
        "seed": 3,
        "optim": { "lr": lr, "grad_clip": clip },
        "model": tiny_gate_dccrn(),
        "disc": tiny_disc(),
    });
    let path = dir.join("train.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn simulate_train_enhance_evaluate_audit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_corpus(&d.join("src"), 3, 2, 2, 0.4, 1).unwrap();
    let manifest = d.join("src/manifest.jsonl");

    let corpus = d.join("corpus");
    ok(&[
        "simulate",
        "--stage",
        "1",
        "--manifest",
        s(&manifest),
        "--out",
        s(&corpus),
        "--count",
        "4",
        "--seed",
        "7",
        "--segment-seconds",
        "0.1",
    ]);
    assert_eq!(std::fs::read_dir(corpus.join("input")).unwrap().count(), 4);
    assert_eq!(
        std::fs::read_dir(corpus.join("recipes")).unwrap().count(),
        4
    );

    // Same seed, same corpus.
    let again = d.join("again");
    ok(&[
        "simulate",
        "--stage",
        "1",
        "--manifest",
        s(&manifest),
        "--out",
        s(&again),
        "--count",
        "4",
        "--seed",
        "7",
        "--segment-seconds",
        "0.1",
    ]);
    for f in ["input/000002.wav", "recipes/000003.json"] {
        assert_eq!(
            std::fs::read(corpus.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap()
        );
    }

    let audit: serde_json::Value =
        serde_json::from_str(&ok(&["audit-corpus", "--dir", s(&corpus)])).unwrap();
    assert_eq!(audit["items"], 4);
    assert_eq!(audit["replay"]["checked"], 4);

    let summary: serde_json::Value = serde_json::from_str(&ok(&[
        "train",
        "--stage",
        "1",
        "--config",
        s(&train_config(d, 1e-3, Some(5.0))),
    ]))
    .unwrap();
    assert_eq!(summary["steps"], 2);
    let ckpt = d.join("ckpt/last.safetensors");
    assert!(ckpt.exists());
    assert!(d.join("ckpt/metrics.csv").exists());

    let out_wav = d.join("enhanced.wav");
    ok(&[
        "enhance",
        "--ckpt",
        s(&ckpt),
        "--in",
        s(&corpus.join("input/000000.wav")),
        "--out",
        s(&out_wav),
    ]);
    assert!(out_wav.exists());

    let report = d.join("report");
    ok(&[
        "evaluate",
        "--ckpt",
        s(&ckpt),
        "--corpus",
        s(&corpus),
        "--out",
        s(&report),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["aggregate"]["files"], 4);
    assert_eq!(json["model"]["params"], 135_222);
    assert!(report.join("report.csv").exists());

    let params: serde_json::Value =
        serde_json::from_str(&ok(&["count-params", "--ckpt", s(&ckpt)])).unwrap();
    assert_eq!(params["params"], 135_222);

    let rtf: serde_json::Value = serde_json::from_str(&ok(&[
        "measure-rtf",
        "--ckpt",
        s(&ckpt),
        "--seconds",
        "0.2",
        "--runs",
        "1",
    ]))
    .unwrap();
    assert!(rtf["rtf"].as_f64().unwrap() > 0.0);
    assert_eq!(rtf["threads"], 1);
    assert!(!rtf["hardware"].as_str().unwrap().is_empty());
}

#[test]
fn count_params_of_the_full_cascade() {
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["count-params", "--arch", "cascade-sdccsn"])).unwrap();
    let m = v["millions"].as_f64().unwrap();
    assert!((m - 10.0).abs() <= 1.0, "{m}");
    assert_eq!(v["model"], "GateDCCRN+S-DCCSN");
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("missing.jsonl");
    assert_eq!(
        code(&[
            "simulate",
            "--stage",
            "1",
            "--manifest",
            s(&missing),
            "--out",
            s(&d.join("o")),
            "--count",
            "2"
        ]),
        2
    );
    assert_eq!(
        code(&[
            "simulate",
            "--stage",
            "3",
            "--manifest",
            s(&missing),
            "--out",
            s(&d.join("o")),
            "--count",
            "2"
        ]),
        2
    );
    assert_eq!(code(&["audit-corpus", "--dir", s(d)]), 2);
    assert_eq!(code(&["count-params"]), 2);
    std::fs::write(d.join("x.safetensors"), b"junk").unwrap();
    assert_eq!(
        code(&[
            "enhance",
            "--ckpt",
            s(&d.join("x.safetensors")),
            "--in",
            "a.wav",
            "--out",
            "b.wav"
        ]),
        2
    );
}

#[test]
fn diverging_training_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_corpus(&d.join("src"), 2, 1, 1, 0.3, 2).unwrap();
    let o = repairnet(&[
        "train",
        "--stage",
        "1",
        "--config",
        s(&train_config(d, 1e30, None)),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(d.join("ckpt/nan_dump.safetensors").exists());
}
