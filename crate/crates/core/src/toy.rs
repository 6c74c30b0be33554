//! Small configurations and synthetic signals for smoke tests, examples and
//! overfit checks. Nothing here is tuned for quality.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{wav::write_wav, wav::WavEncoding, Waveform, FULLBAND_RATE};
use crate::degrade::{CorpusManifest, ManifestEntry, SourceKind};
use crate::error::Result;
use crate::losses::{DiscConfig, DiscLayer};
use crate::models::{Arch, ModelConfig};

/// Voiced, speech-like test signal: a harmonic series on a gliding pitch
/// under a syllable-rate envelope, peak 0.5.
pub fn synthetic_speech(seconds: f64, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * FULLBAND_RATE as f64).round() as usize;
    let fs = FULLBAND_RATE as f64;
    let f0 = rng.random_range(100.0..220.0);
    let glide = rng.random_range(-0.3..0.3);
    let syl = rng.random_range(3.0..5.0);
    let env_phase = rng.random_range(0.0..2.0 * PI);
    let formant = rng.random_range(500.0..900.0);
    let harmonics = ((20_000.0 / f0) as usize).min(60);
    let phases: Vec<f64> = (0..harmonics)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let mut phase = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let f = f0 * (1.0 + glide * (2.0 * PI * 0.7 * t).sin() * 0.2);
        phase += 2.0 * PI * f / fs;
        let mut s = 0.0;
        for (k, ph) in phases.iter().enumerate() {
            let fk = f * (k + 1) as f64;
            let shape = 1.0 / (1.0 + ((fk - formant) / 400.0).powi(2)) + 0.05 / (k + 1) as f64;
            s += shape * ((k + 1) as f64 * phase + ph).sin();
        }
        let env = 0.5 - 0.5 * (2.0 * PI * syl * t + env_phase).cos();
        out.push(s * (0.1 + 0.9 * env));
    }
    normalise(out, 0.5)
}

/// White noise with a random spectral tilt, peak 0.5.
pub fn synthetic_noise(seconds: f64, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * FULLBAND_RATE as f64).round() as usize;
    let a = rng.random_range(0.0..0.9);
    let mut prev = 0.0;
    let out = (0..n)
        .map(|_| {
            prev = a * prev + rng.random_range(-1.0..1.0);
            prev
        })
        .collect();
    normalise(out, 0.5)
}

/// Exponentially decaying noise tail behind a unit direct path.
pub fn synthetic_rir(rt60: f64, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (rt60 * FULLBAND_RATE as f64).round().max(1.0) as usize;
    let decay = (1e-3f64).ln() / n as f64;
    let mut h: Vec<f64> = (0..n)
        .map(|i| 0.3 * (decay * i as f64).exp() * rng.random_range(-1.0..1.0))
        .collect();
    h[0] = 1.0;
    Waveform::new(h, FULLBAND_RATE).expect("finite taps")
}

fn normalise(x: Vec<f64>, peak: f64) -> Waveform {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    Waveform::new(x.into_iter().map(|v| v * peak / m).collect(), FULLBAND_RATE)
        .expect("finite samples")
}

/// Writes a synthetic corpus (WAV files plus `manifest.jsonl`) into `dir`.
pub fn write_corpus(
    dir: &Path,
    speech: usize,
    noise: usize,
    rir: usize,
    seconds: f64,
    seed: u64,
) -> Result<CorpusManifest> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    let mut put = |name: String, w: &Waveform, kind| -> Result<()> {
        write_wav(dir.join(&name), w, WavEncoding::Float32)?;
        entries.push(ManifestEntry {
            path: name.into(),
            kind,
            duration_s: w.duration_seconds(),
        });
        Ok(())
    };
    for i in 0..speech {
        put(
            format!("speech_{i:03}.wav"),
            &synthetic_speech(seconds, seed + i as u64),
            SourceKind::Speech,
        )?;
    }
    for i in 0..noise {
        let w = synthetic_noise(seconds, seed + 1_000 + i as u64);
        put(format!("noise_{i:03}.wav"), &w, SourceKind::Noise)?;
    }
    for i in 0..rir {
        put(
            format!("rir_{i:03}.wav"),
            &synthetic_rir(0.2, seed + 2_000 + i as u64),
            SourceKind::Rir,
        )?;
    }
    let m = CorpusManifest {
        entries,
        base_dir: dir.to_path_buf(),
    };
    m.save(dir.join("manifest.jsonl"))?;
    Ok(m)
}

/// GateDCCRN with narrow layers and a one-layer LSTM.
pub fn tiny_gate_dccrn() -> ModelConfig {
    ModelConfig {
        channels: vec![8, 16, 16, 32, 32, 32],
        lstm_hidden: 32,
        lstm_layers: 1,
        ..ModelConfig::gate_dccrn()
    }
}

/// S-DCCSN with narrow layers and two STCM units per branch.
pub fn tiny_sdccsn() -> ModelConfig {
    ModelConfig {
        arch: Arch::SDccsn,
        sub_channels: vec![8, 8, 16, 16, 16, 16],
        ced_channels: 8,
        dense_depth: 2,
        stcm_hidden: 16,
        stcm_units_sub: 2,
        stcm_units_full: 2,
        ..ModelConfig::sdccsn()
    }
}

/// Two periods and one scale, a few channels each.
pub fn tiny_disc() -> DiscConfig {
    DiscConfig {
        periods: vec![2, 3],
        mpd_layers: vec![
            DiscLayer {
                out: 4,
                kernel: 5,
                stride: 3,
                groups: 1,
            },
            DiscLayer {
                out: 8,
                kernel: 5,
                stride: 3,
                groups: 1,
            },
            DiscLayer {
                out: 8,
                kernel: 5,
                stride: 1,
                groups: 1,
            },
        ],
        scales: 1,
        msd_layers: vec![
            DiscLayer {
                out: 8,
                kernel: 15,
                stride: 1,
                groups: 1,
            },
            DiscLayer {
                out: 8,
                kernel: 41,
                stride: 4,
                groups: 4,
            },
            DiscLayer {
                out: 8,
                kernel: 5,
                stride: 1,
                groups: 1,
            },
        ],
        post_kernel: 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signals_are_deterministic_and_bounded() {
        let a = synthetic_speech(0.2, 3);
        assert_eq!(a, synthetic_speech(0.2, 3));
        assert!((a.peak() - 0.5).abs() < 1e-12);
        assert_ne!(a, synthetic_speech(0.2, 4));
        assert!((synthetic_noise(0.1, 1).peak() - 0.5).abs() < 1e-12);
        assert_eq!(synthetic_rir(0.1, 1).samples()[0], 1.0);
    }

    #[test]
    fn tiny_configs_validate() {
        tiny_gate_dccrn().validate().unwrap();
        tiny_sdccsn().validate().unwrap();
    }

    #[test]
    fn corpus_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), 2, 1, 1, 0.1, 0).unwrap();
        let m = CorpusManifest::load(dir.path().join("manifest.jsonl")).unwrap();
        assert_eq!(m.entries.len(), 4);
        m.validate().unwrap();
    }
}
