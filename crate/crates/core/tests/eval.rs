//! Objective evaluation and corpus auditing.

use std::collections::BTreeMap;
use std::path::Path;

use candle_core::DType;
use repairnet_core::audio::wav::read_wav;
use repairnet_core::degrade::{export_corpus, SimConfig, Stage};
use repairnet_core::eval::*;
use repairnet_core::losses::{si_snr_db, SI_SNR_CAP_DB};
use repairnet_core::models::{Model, Pipeline};
use repairnet_core::toy::{synthetic_noise, synthetic_speech, tiny_gate_dccrn, write_corpus};

fn corpus(dir: &Path, stage: Stage, count: usize) {
    write_corpus(&dir.join("src"), 3, 2, 2, 0.4, 9).unwrap();
    export_corpus(
        &dir.join("src/manifest.jsonl"),
        stage,
        count,
        SimConfig::default(),
        17,
        0.1,
        &dir.join("corpus"),
    )
    .unwrap();
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn unchanged_output_scores_zero_improvement() {
    let clean = synthetic_speech(0.2, 1);
    let noisy = clean
        .samples()
        .iter()
        .zip(synthetic_noise(0.2, 2).samples())
        .map(|(a, b)| a + 0.2 * b)
        .collect();
    let noisy = repairnet_core::audio::Waveform::new(noisy, 48_000).unwrap();
    let same = score_file("a", &noisy, &noisy, &clean).unwrap();
    assert_eq!(same.si_snr_improvement, 0.0);
    assert_eq!(same.lsd_in, same.lsd_out);
    let perfect = score_file("b", &noisy, &clean, &clean).unwrap();
    assert_eq!(perfect.si_snr_out, SI_SNR_CAP_DB);
    assert_eq!(perfect.lsd_out, 0.0);
    assert!(perfect.si_snr_improvement > 0.0);
}

#[test]
fn aggregate_is_the_mean_of_files() {
    let clean = synthetic_speech(0.1, 3);
    let a = score_file("a", &clean.scaled(0.5), &clean.scaled(0.9), &clean).unwrap();
    let noisy = clean.map(|v| v + 0.01);
    let b = score_file("b", &noisy, &clean, &clean).unwrap();
    let agg = aggregate(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(agg.files, 2);
    assert!((agg.si_snr_in - 0.5 * (a.si_snr_in + b.si_snr_in)).abs() < 1e-12);
    assert!((agg.lsd_out - 0.5 * (a.lsd_out + b.lsd_out)).abs() < 1e-12);
    assert!((agg.total_seconds - 0.2).abs() < 1e-12);
    assert!(aggregate(&[]).is_err());
}

#[test]
fn evaluation_matches_recomputed_metrics_and_leaves_inputs_alone() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), Stage::One, 3);
    let c = dir.path().join("corpus");
    let (input, target) = (c.join("input"), c.join("target"));
    let before = (snapshot(&input), snapshot(&target));
    let pipeline = Pipeline::Single(Model::new(tiny_gate_dccrn(), DType::F32, 0).unwrap());
    let out = dir.path().join("enhanced");
    let report = evaluate_dirs(&pipeline, &input, &target, Some(&out), None).unwrap();
    assert_eq!(report.files.len(), 3);
    assert_eq!(before, (snapshot(&input), snapshot(&target)));
    for f in &report.files {
        let x = read_wav(input.join(&f.file)).unwrap();
        let y = read_wav(out.join(&f.file)).unwrap();
        let r = read_wav(target.join(&f.file)).unwrap();
        let delta = si_snr_db(y.samples(), r.samples()).unwrap()
            - si_snr_db(x.samples(), r.samples()).unwrap();
        // The enhanced file is stored as float32.
        assert!(
            (delta - f.si_snr_improvement).abs() < 1e-4,
            "{delta} vs {}",
            f.si_snr_improvement
        );
    }
    let rep = dir.path().join("report");
    write_report(&report, &rep).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["aggregate"]["files"], 3);
    assert_eq!(json["model"]["model"], "GateDCCRN");
    let csv = std::fs::read_to_string(rep.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn evaluation_without_matching_references_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let pipeline = Pipeline::Single(Model::new(tiny_gate_dccrn(), DType::F32, 0).unwrap());
    assert!(evaluate_dirs(&pipeline, &a, &b, None, None).is_err());
}

#[test]
fn stage_one_audit_counts_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), Stage::One, 40);
    let r = audit_corpus(&dir.path().join("corpus")).unwrap();
    assert_eq!((r.items, r.stage), (40, 1));
    assert_eq!(r.category_counts.values().sum::<usize>(), 40);
    assert!((r.category_fractions.values().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(r.replay.checked, 40);
    assert!(r.replay.failures.is_empty(), "{:?}", r.replay);
    assert!(r.replay.max_abs_err <= REPLAY_TOLERANCE);
    assert!(r.snr_db.is_none());
}

#[test]
fn stage_two_audit_replays_with_the_source_banks() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), Stage::Two, 12);
    let r = audit_corpus(&dir.path().join("corpus")).unwrap();
    assert_eq!(r.stage, 2);
    assert_eq!(r.snr_db.unwrap().count, 12);
    assert!(r.reverb_fraction.is_some());
    assert_eq!(r.replay.checked, 12);
    assert!(r.replay.failures.is_empty(), "{:?}", r.replay);
}

#[test]
fn audit_of_a_directory_without_corpus_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(audit_corpus(dir.path()).is_err());
}
