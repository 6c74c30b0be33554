use rand::Rng;

use super::config::SimConfig;
use super::ops::{apply_clipping, apply_discontinuity, apply_gain, apply_lowpass_coloration};
use super::recipe::{DistortionRecipe, NoiseAndReverb, Stage1Distortion};
use crate::audio::{convolve_rir, mix_at_snr_with_offset, Waveform};
use crate::error::{Error, Result};

/// A simulated training pair with its provenance.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub input: Waveform,
    pub target: Waveform,
    /// The (possibly reverberant) speech part of `input`; `input` minus this
    /// is the scaled noise. Equal to `input` for stage one.
    pub speech_component: Waveform,
    pub recipe: DistortionRecipe,
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws one stage-one distortion according to the configured proportions.
pub fn sample_stage1<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Stage1Distortion {
    let u: f64 = rng.random();
    if u < cfg.p_coloration {
        let branch: f64 = rng.random();
        if branch < cfg.p_lowpass_within_coloration {
            let rate = cfg.lowpass_rates[rng.random_range(0..cfg.lowpass_rates.len())];
            Stage1Distortion::Lowpass { rate }
        } else {
            Stage1Distortion::Clip {
                eta: uniform(rng, cfg.clip_eta_range),
            }
        }
    } else if u < cfg.p_coloration + cfg.p_discontinuity {
        Stage1Distortion::Discontinuity {
            window_ms: cfg.disc_window_ms,
            zero_prob: cfg.disc_zero_prob,
            mask_seed: rng.random(),
            zeroed_windows: 0,
            total_windows: 0,
        }
    } else {
        Stage1Distortion::Loudness {
            scale: uniform(rng, cfg.loudness_scale_range),
        }
    }
}

/// Applies a recorded stage-one distortion. The returned distortion carries
/// the window counts of a discontinuity.
pub fn apply_stage1(
    clean: &Waveform,
    distortion: &Stage1Distortion,
) -> Result<(Waveform, Stage1Distortion)> {
    let mut applied = distortion.clone();
    let out = match distortion {
        Stage1Distortion::Lowpass { rate } if *rate >= clean.sample_rate() => clean.clone(),
        Stage1Distortion::Lowpass { rate } => apply_lowpass_coloration(clean, *rate)?,
        Stage1Distortion::Clip { eta } => apply_clipping(clean, *eta)?,
        Stage1Distortion::Discontinuity {
            window_ms,
            zero_prob,
            mask_seed,
            ..
        } => {
            let (w, zeroed) = apply_discontinuity(clean, *window_ms, *zero_prob, *mask_seed)?;
            let win = (clean.sample_rate() as f64 * window_ms / 1000.0).round() as usize;
            if let Stage1Distortion::Discontinuity {
                zeroed_windows,
                total_windows,
                ..
            } = &mut applied
            {
                *zeroed_windows = zeroed;
                *total_windows = clean.len().div_ceil(win);
            }
            w
        }
        Stage1Distortion::Loudness { scale } => apply_gain(clean, *scale)?,
    };
    Ok((out, applied))
}

pub fn simulate_stage1<R: Rng>(
    clean: &Waveform,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Simulated> {
    let distortion = sample_stage1(cfg, rng);
    let (input, distortion) = apply_stage1(clean, &distortion)?;
    Ok(Simulated {
        speech_component: input.clone(),
        input,
        target: clean.clone(),
        recipe: DistortionRecipe {
            stage: 1,
            distortion,
            stage2: None,
            output_gain: 1.0,
        },
    })
}

/// Draws the reverberation and noise part of a stage-two recipe.
pub fn sample_stage2<R: Rng>(
    cfg: &SimConfig,
    rng: &mut R,
    noise_bank: &[Waveform],
    rir_bank: &[Waveform],
) -> Result<NoiseAndReverb> {
    if noise_bank.is_empty() {
        return Err(Error::invalid(
            "stage-two simulation needs a non-empty noise bank",
        ));
    }
    if rir_bank.is_empty() && cfg.stage2_reverb_prob > 0.0 {
        return Err(Error::invalid(
            "stage-two simulation needs a non-empty RIR bank",
        ));
    }
    let reverb = rng.random_bool(cfg.stage2_reverb_prob);
    let rir_id = if reverb {
        Some(rng.random_range(0..rir_bank.len()))
    } else {
        None
    };
    let noise_id = rng.random_range(0..noise_bank.len());
    let noise_offset = rng.random_range(0..noise_bank[noise_id].len().max(1));
    let snr_db = uniform(rng, cfg.stage2_snr_range);
    Ok(NoiseAndReverb {
        rir_id,
        noise_id,
        noise_offset,
        snr_db,
    })
}

/// Replays a stage-two recipe: stage-one degradation, optional RIR, noise at
/// the recorded SNR, then a whole-mixture gain if the peak exceeds `peak_limit`.
pub fn apply_stage2(
    clean: &Waveform,
    distortion: &Stage1Distortion,
    nr: &NoiseAndReverb,
    noise_bank: &[Waveform],
    rir_bank: &[Waveform],
    peak_limit: f64,
) -> Result<Simulated> {
    let (degraded, distortion) = apply_stage1(clean, distortion)?;
    let speech = match nr.rir_id {
        Some(id) => {
            let rir = rir_bank
                .get(id)
                .ok_or_else(|| Error::invalid(format!("RIR id {id} out of range")))?;
            convolve_rir(&degraded, rir)?
        }
        None => degraded,
    };
    let noise = noise_bank
        .get(nr.noise_id)
        .ok_or_else(|| Error::invalid(format!("noise id {} out of range", nr.noise_id)))?;
    let mix = mix_at_snr_with_offset(&speech, noise, nr.snr_db, nr.noise_offset)?;
    let peak = mix.mixture.peak();
    let gain = if peak > peak_limit {
        peak_limit / peak
    } else {
        1.0
    };
    let (input, speech_component) = if gain < 1.0 {
        (mix.mixture.scaled(gain), speech.scaled(gain))
    } else {
        (mix.mixture, speech)
    };
    Ok(Simulated {
        input,
        target: clean.clone(),
        speech_component,
        recipe: DistortionRecipe {
            stage: 2,
            distortion,
            stage2: Some(nr.clone()),
            output_gain: gain,
        },
    })
}

pub fn simulate_stage2<R: Rng>(
    clean: &Waveform,
    cfg: &SimConfig,
    rng: &mut R,
    noise_bank: &[Waveform],
    rir_bank: &[Waveform],
) -> Result<Simulated> {
    let distortion = sample_stage1(cfg, rng);
    let nr = sample_stage2(cfg, rng, noise_bank, rir_bank)?;
    apply_stage2(
        clean,
        &distortion,
        &nr,
        noise_bank,
        rir_bank,
        cfg.mix_peak_limit,
    )
}

/// Re-applies any recorded recipe to the same sources.
pub fn replay(
    clean: &Waveform,
    recipe: &DistortionRecipe,
    noise_bank: &[Waveform],
    rir_bank: &[Waveform],
    peak_limit: f64,
) -> Result<Simulated> {
    match &recipe.stage2 {
        None => {
            let (input, distortion) = apply_stage1(clean, &recipe.distortion)?;
            Ok(Simulated {
                speech_component: input.clone(),
                input,
                target: clean.clone(),
                recipe: DistortionRecipe {
                    distortion,
                    ..recipe.clone()
                },
            })
        }
        Some(nr) => apply_stage2(
            clean,
            &recipe.distortion,
            nr,
            noise_bank,
            rir_bank,
            peak_limit,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::active_power;
    use crate::degrade::recipe::Category;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn speechlike(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0..len)
            .map(|n| {
                let t = n as f64 / 48_000.0;
                0.4 * (2.0 * std::f64::consts::PI * 220.0 * t).sin() + rng.random_range(-0.05..0.05)
            })
            .collect();
        Waveform::new(s, 48_000).unwrap()
    }

    #[test]
    fn stage1_category_frequencies() {
        let cfg = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let (mut col, mut disc, mut loud, mut lp) = (0, 0, 0, 0);
        for _ in 0..n {
            let d = sample_stage1(&cfg, &mut rng);
            match d.category() {
                Category::Coloration => col += 1,
                Category::Discontinuity => disc += 1,
                Category::Loudness => loud += 1,
            }
            if matches!(d, Stage1Distortion::Lowpass { .. }) {
                lp += 1;
            }
        }
        let f = |c: usize| c as f64 / n as f64;
        assert!((f(col) - 0.60).abs() <= 0.015);
        assert!((f(disc) - 0.25).abs() <= 0.015);
        assert!((f(loud) - 0.15).abs() <= 0.015);
        assert!((lp as f64 / col as f64 - 0.60).abs() <= 0.02);
    }

    #[test]
    fn stage1_forced_loudness_is_exact_scale() {
        let cfg = SimConfig {
            p_coloration: 0.0,
            p_discontinuity: 0.0,
            p_loudness: 1.0,
            ..SimConfig::default()
        };
        let clean = speechlike(4_800, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sim = simulate_stage1(&clean, &cfg, &mut rng).unwrap();
        let Stage1Distortion::Loudness { scale } = sim.recipe.distortion else {
            panic!("expected loudness");
        };
        assert_eq!(sim.input, clean.scaled(scale));
        assert_eq!(sim.target, clean);
    }

    #[test]
    fn stage1_replay_is_bit_exact() {
        let cfg = SimConfig::default();
        let clean = speechlike(9_600, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let sim = simulate_stage1(&clean, &cfg, &mut rng).unwrap();
            let again = replay(&clean, &sim.recipe, &[], &[], 1.0).unwrap();
            assert_eq!(again.input, sim.input);
            assert_eq!(sim.target, clean);
            assert!(sim.input.peak() <= 1.5);
        }
    }

    #[test]
    fn stage2_snr_and_replay() {
        let cfg = SimConfig::default();
        let clean = speechlike(9_600, 5);
        let noise = vec![speechlike(3_000, 6), speechlike(20_000, 7)];
        let mut rir = vec![0.0; 400];
        rir[0] = 1.0;
        rir[120] = 0.4;
        rir[399] = 0.1;
        let rirs = vec![Waveform::new(rir, 48_000).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let sim = simulate_stage2(&clean, &cfg, &mut rng, &noise, &rirs).unwrap();
            let nr = sim.recipe.stage2.clone().unwrap();
            let n = sim.input.sub(&sim.speech_component).unwrap();
            let snr = 10.0
                * (active_power(&sim.speech_component).unwrap() / (n.energy() / n.len() as f64))
                    .log10();
            assert!((snr - nr.snr_db).abs() < 0.1, "{snr} vs {}", nr.snr_db);
            assert!(sim.input.peak() <= 1.0 + 1e-12);
            let again = replay(&clean, &sim.recipe, &noise, &rirs, 1.0).unwrap();
            assert_eq!(again.input, sim.input);
        }
    }

    #[test]
    fn stage2_limit_case_matches_stage1() {
        let cfg = SimConfig {
            stage2_reverb_prob: 0.0,
            stage2_snr_range: (60.0, 60.0),
            ..SimConfig::default()
        };
        let clean = speechlike(9_600, 9);
        let noise = vec![speechlike(5_000, 10)];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sim = simulate_stage2(&clean, &cfg, &mut rng, &noise, &[]).unwrap();
        let (s1, _) = apply_stage1(&clean, &sim.recipe.distortion).unwrap();
        // At 60 dB the noise is 1e-3 of the speech in amplitude, measured on
        // active frames; every frame is active here, so the bound is tight.
        let err = sim.input.sub(&s1).unwrap().energy().sqrt() / s1.energy().sqrt();
        assert!(err <= 1e-3 * (1.0 + 1e-9), "{err}");
    }

    #[test]
    fn stage2_rejects_empty_banks() {
        let cfg = SimConfig::default();
        let clean = speechlike(4_800, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(simulate_stage2(&clean, &cfg, &mut rng, &[], &[]).is_err());
        let noise = vec![speechlike(100, 2)];
        assert!(simulate_stage2(&clean, &cfg, &mut rng, &noise, &[]).is_err());
    }
}
