//! Whole-network properties: parameter counts, shapes, causality, the
//! checkpoint container and the stage-one freeze.

use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor};
use repairnet_core::models::*;
use repairnet_core::nn::ComplexTensor;
use repairnet_core::toy::{tiny_gate_dccrn, tiny_sdccsn};

fn millions(cfg: ModelConfig) -> f64 {
    Model::new(cfg, DType::F32, 0).unwrap().num_params() as f64 / 1e6
}

fn spectrum(frames: usize, seed: u64, dtype: DType) -> ComplexTensor {
    let mut ps = repairnet_core::nn::ParamStore::new(dtype, seed);
    let t = ps
        .uniform("s", &[1, frames, 2, MODEL_BINS + 1], 1.0)
        .unwrap();
    ComplexTensor::new(t.detach()).unwrap()
}

fn max_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
    (a - b)
        .unwrap()
        .abs()
        .unwrap()
        .flatten_all()
        .unwrap()
        .max(0)
        .unwrap()
        .to_dtype(DType::F64)
        .unwrap()
        .to_scalar::<f64>()
        .unwrap()
}

#[test]
fn full_size_parameter_counts() {
    let dccrn = millions(ModelConfig::dccrn());
    let gate = millions(ModelConfig::gate_dccrn());
    let sdccrn = millions(ModelConfig::sdccrn());
    let sdccsn = millions(ModelConfig::sdccsn());
    let within = |v: f64, r: f64, tol: f64| (v - r).abs() <= tol * r;
    assert!(within(dccrn, 5.05, 0.10), "DCCRN {dccrn}");
    assert!(within(gate, 6.70, 0.10), "GateDCCRN {gate}");
    assert!(
        within(gate + sdccrn, 9.70, 0.10),
        "cascade with S-DCCRN {}",
        gate + sdccrn
    );
    assert!(
        within(gate + sdccsn, 10.00, 0.10),
        "cascade with S-DCCSN {}",
        gate + sdccsn
    );
    assert!(within(sdccsn, 3.30, 0.15), "S-DCCSN {sdccsn}");
}

#[test]
fn output_keeps_input_shape() {
    for cfg in [tiny_gate_dccrn(), tiny_sdccsn()] {
        let m = Model::new(cfg, DType::F32, 1).unwrap();
        let x = spectrum(5, 2, DType::F32);
        assert_eq!(m.forward(&x).unwrap().dims(), x.dims());
    }
}

#[test]
fn wrong_bin_count_is_rejected() {
    let m = Model::new(tiny_gate_dccrn(), DType::F32, 1).unwrap();
    let x = ComplexTensor::new(Tensor::zeros((1, 3, 2, 300), DType::F32, &Device::Cpu).unwrap())
        .unwrap();
    assert!(m.forward(&x).is_err());
}

#[test]
fn networks_are_causal() {
    // Changing frames from t0 on must leave earlier outputs untouched.
    let t0 = 4;
    for cfg in [tiny_gate_dccrn(), tiny_sdccsn()] {
        let m = Model::new(cfg, DType::F64, 3).unwrap();
        let a = spectrum(8, 4, DType::F64);
        let tail = spectrum(8, 5, DType::F64);
        let b = Tensor::cat(
            &[
                a.data().narrow(1, 0, t0).unwrap(),
                tail.data().narrow(1, t0, 8 - t0).unwrap(),
            ],
            1,
        )
        .unwrap();
        let b = ComplexTensor::new(b).unwrap();
        let ya = m.forward(&a).unwrap().into_data().narrow(1, 0, t0).unwrap();
        let yb = m.forward(&b).unwrap().into_data().narrow(1, 0, t0).unwrap();
        assert!(max_abs_diff(&ya, &yb) < 1e-12);
        let later_a = m.forward(&a).unwrap().into_data().narrow(1, t0, 4).unwrap();
        let later_b = m.forward(&b).unwrap().into_data().narrow(1, t0, 4).unwrap();
        assert!(max_abs_diff(&later_a, &later_b) > 1e-6);
    }
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.safetensors");
    let s1 = Model::new(tiny_gate_dccrn(), DType::F32, 5).unwrap();
    let s2 = Model::new(tiny_sdccsn(), DType::F32, 6).unwrap();
    let mut extra = BTreeMap::new();
    extra.insert("note".to_string(), "kept".to_string());
    save_checkpoint(&path, 2, true, &[("stage1", &s1), ("stage2", &s2)], &extra).unwrap();
    let mut ck = load_checkpoint(&path, DType::F32).unwrap();
    assert_eq!((ck.stage, ck.frozen), (2, true));
    assert_eq!(ck.extra.get("note").map(String::as_str), Some("kept"));
    for (name, orig) in [("stage1", &s1), ("stage2", &s2)] {
        let m = ck.take(name).unwrap();
        assert_eq!(m.config(), orig.config());
        let a = orig.params().snapshot().unwrap();
        let b = m.params().snapshot().unwrap();
        assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
        for (k, t) in &a {
            let x: Vec<f32> = t.flatten_all().unwrap().to_vec1().unwrap();
            let y: Vec<f32> = b[k].flatten_all().unwrap().to_vec1().unwrap();
            assert!(
                x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()),
                "{k}"
            );
        }
        let x = spectrum(3, 7, DType::F32);
        let ya = orig.forward(&x).unwrap().into_data();
        let yb = m.forward(&x).unwrap().into_data();
        assert_eq!(max_abs_diff(&ya, &yb), 0.0);
    }
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.safetensors");
    std::fs::write(&path, b"not a checkpoint").unwrap();
    assert!(load_checkpoint(&path, DType::F32).is_err());
}

#[test]
fn frozen_cascade_sends_no_gradient_to_stage_one() {
    let s1 = Model::new(tiny_gate_dccrn(), DType::F32, 8).unwrap();
    let s2 = Model::new(tiny_sdccsn(), DType::F32, 9).unwrap();
    let x = spectrum(3, 10, DType::F32);
    for frozen in [true, false] {
        let c = Cascade::new(
            Model::new(s1.config().clone(), DType::F32, 8).unwrap(),
            Model::new(s2.config().clone(), DType::F32, 9).unwrap(),
            frozen,
        )
        .unwrap();
        let loss = c
            .forward(&x)
            .unwrap()
            .1
            .into_data()
            .sqr()
            .unwrap()
            .sum_all()
            .unwrap();
        let grads = loss.backward().unwrap();
        let reached = c
            .stage1
            .params()
            .vars()
            .iter()
            .filter(|v| grads.get(v.as_tensor()).is_some())
            .count();
        if frozen {
            assert_eq!(reached, 0);
        } else {
            assert!(reached > 0);
        }
        assert!(c
            .stage2
            .params()
            .vars()
            .iter()
            .all(|v| grads.get(v.as_tensor()).is_some()));
    }
}
