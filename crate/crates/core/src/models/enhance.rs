use std::time::Instant;

use candle_core::{DType, Device};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cascade::Cascade;
use super::checkpoint::{load_checkpoint, Checkpoint};
use super::model::Model;
use super::spectral::{spectra_from_tensor, spectra_to_tensor};
use crate::audio::{istft, stft, StftConfig, Waveform};
use crate::error::{Error, Result};
use crate::nn::ComplexTensor;

/// What `enhance` runs: a single network or the two-stage cascade.
// Built once per process; boxing the larger variant buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug)]
pub enum Pipeline {
    Single(Model),
    Cascade(Cascade),
}

impl Pipeline {
    /// Loads a checkpoint for float32 inference.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_checkpoint(load_checkpoint(path, DType::F32)?)
    }

    pub fn from_checkpoint(mut ckpt: Checkpoint) -> Result<Self> {
        let s1 = ckpt.take("stage1");
        let s2 = ckpt.take("stage2");
        match (s1, s2) {
            (Some(a), Some(b)) => Ok(Pipeline::Cascade(Cascade::new(a, b, ckpt.frozen)?)),
            (Some(m), None) | (None, Some(m)) => Ok(Pipeline::Single(m)),
            (None, None) => Err(Error::Checkpoint("checkpoint holds no model".into())),
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Pipeline::Single(m) => m.num_params(),
            Pipeline::Cascade(c) => c.num_params(),
        }
    }

    pub fn dtype(&self) -> DType {
        match self {
            Pipeline::Single(m) => m.dtype(),
            Pipeline::Cascade(c) => c.stage1.dtype(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Pipeline::Single(m) => m.config().arch.name().to_string(),
            Pipeline::Cascade(c) => format!(
                "{}+{}",
                c.stage1.config().arch.name(),
                c.stage2.config().arch.name()
            ),
        }
    }

    pub fn forward(&self, spec: &ComplexTensor) -> Result<ComplexTensor> {
        match self {
            Pipeline::Single(m) => m.forward(spec),
            Pipeline::Cascade(c) => Ok(c.forward(spec)?.1),
        }
    }
}

/// Waveform in, waveform out; the whole utterance in one pass.
pub fn enhance(p: &Pipeline, w: &Waveform) -> Result<Waveform> {
    let cfg = StftConfig::default();
    if w.sample_rate() != cfg.sample_rate {
        return Err(Error::invalid(format!(
            "model runs at {} Hz, input is {} Hz",
            cfg.sample_rate,
            w.sample_rate()
        )));
    }
    let spec = stft(w, &cfg)?;
    let x = spectra_to_tensor(&[&spec], p.dtype(), &Device::Cpu)?;
    let y = p.forward(&x)?;
    let out = spectra_from_tensor(&y, cfg, w.len())?;
    let wave = istft(&out[0])?;
    if wave.samples().iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("enhanced signal is not finite".into()));
    }
    Ok(wave)
}

#[derive(Debug, Clone, Serialize)]
pub struct RtfReport {
    pub model: String,
    pub params: usize,
    pub audio_seconds: f64,
    pub runs: usize,
    pub run_seconds: Vec<f64>,
    /// Median processing time over audio duration.
    pub rtf: f64,
    pub threads: usize,
    pub hardware: String,
}

/// CPU model from `/proc/cpuinfo`, or the architecture name.
pub fn hardware_string() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string())
}

/// Times `enhance` on `seconds` of noise, `runs` times.
pub fn measure_rtf(p: &Pipeline, seconds: f64, runs: usize) -> Result<RtfReport> {
    if seconds.is_nan() || seconds <= 0.0 || runs == 0 {
        return Err(Error::invalid("duration and run count must be positive"));
    }
    let rate = StftConfig::default().sample_rate;
    let len = (seconds * rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = Waveform::new(
        (0..len).map(|_| rng.random_range(-0.3..0.3)).collect(),
        rate,
    )?;
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        enhance(p, &w)?;
        times.push(start.elapsed().as_secs_f64());
    }
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if runs % 2 == 1 {
        sorted[runs / 2]
    } else {
        0.5 * (sorted[runs / 2 - 1] + sorted[runs / 2])
    };
    Ok(RtfReport {
        model: p.describe(),
        params: p.num_params(),
        audio_seconds: w.duration_seconds(),
        runs,
        run_seconds: times,
        rtf: median / w.duration_seconds(),
        threads: candle_core::utils::get_num_threads(),
        hardware: hardware_string(),
    })
}
