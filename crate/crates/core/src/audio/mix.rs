use super::Waveform;
use crate::error::{Error, Result};

/// Frames quieter than this RMS (-50 dBFS) do not count towards active power.
pub const ACTIVE_FLOOR_DBFS: f64 = -50.0;
const ACTIVE_FRAME_MS: f64 = 20.0;

/// Mean square over the 20 ms frames whose RMS is above the -50 dBFS floor.
pub fn active_power(w: &Waveform) -> Result<f64> {
    let frame = ((w.sample_rate() as f64 * ACTIVE_FRAME_MS / 1000.0).round() as usize).max(1);
    let floor = 10f64.powf(ACTIVE_FLOOR_DBFS / 20.0);
    let floor_sq = floor * floor;
    let (mut energy, mut count) = (0.0, 0usize);
    for chunk in w.samples().chunks(frame) {
        let e: f64 = chunk.iter().map(|s| s * s).sum();
        if e / chunk.len() as f64 > floor_sq {
            energy += e;
            count += chunk.len();
        }
    }
    if count == 0 {
        return Err(Error::invalid("signal has no active frames"));
    }
    Ok(energy / count as f64)
}

/// Plain mean square.
pub fn mean_power(w: &Waveform) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    w.energy() / w.len() as f64
}

#[derive(Debug, Clone)]
pub struct MixResult {
    pub mixture: Waveform,
    pub scaled_noise: Waveform,
    pub noise_gain: f64,
}

pub fn mix_at_snr(speech: &Waveform, noise: &Waveform, snr_db: f64) -> Result<MixResult> {
    mix_at_snr_with_offset(speech, noise, snr_db, 0)
}

/// Tiles `noise` from `offset` to the speech length and scales it so that
/// `10 log10(P_speech / P_noise) == snr_db`, where the speech power is its
/// active power and the noise power is the mean square of the tiled segment.
pub fn mix_at_snr_with_offset(
    speech: &Waveform,
    noise: &Waveform,
    snr_db: f64,
    offset: usize,
) -> Result<MixResult> {
    speech.ensure_rate(noise)?;
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr must be finite"));
    }
    if noise.is_empty() || noise.energy() == 0.0 {
        return Err(Error::invalid("noise is silent"));
    }
    let ps = active_power(speech).map_err(|_| Error::invalid("speech is silent"))?;
    let n = noise.samples();
    let tiled: Vec<f64> = (0..speech.len())
        .map(|i| n[(offset + i) % n.len()])
        .collect();
    let tiled = Waveform::new(tiled, speech.sample_rate())?;
    let pn = mean_power(&tiled);
    if pn == 0.0 {
        return Err(Error::invalid("noise segment is silent"));
    }
    let gain = (ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled_noise = tiled.scaled(gain);
    let mixture = Waveform::new(
        speech
            .samples()
            .iter()
            .zip(scaled_noise.samples())
            .map(|(s, v)| s + v)
            .collect(),
        speech.sample_rate(),
    )?;
    Ok(MixResult {
        mixture,
        scaled_noise,
        noise_gain: gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new(
            (0..len).map(|_| rng.random_range(-0.5..0.5)).collect(),
            48_000,
        )
        .unwrap()
    }

    fn snr_of(speech: &Waveform, mixture: &Waveform) -> f64 {
        let n = mixture.sub(speech).unwrap();
        10.0 * (active_power(speech).unwrap() / mean_power(&n)).log10()
    }

    #[test]
    fn constant_signal_power() {
        let w = Waveform::new(vec![0.5; 4800], 48_000).unwrap();
        assert!((active_power(&w).unwrap() - 0.25).abs() < 1e-15);
        assert!(active_power(&Waveform::zeros(4800, 48_000)).is_err());
    }

    #[test]
    fn half_silent_signal_uses_active_half() {
        let mut v = vec![0.0; 9600];
        let s = noise(9600, 1);
        v[4800..].copy_from_slice(&s.samples()[4800..]);
        let w = Waveform::new(v, 48_000).unwrap();
        let direct: f64 = s.samples()[4800..].iter().map(|x| x * x).sum::<f64>() / 4800.0;
        assert!((active_power(&w).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn zero_and_twenty_db() {
        let sp = noise(48_000, 2);
        let nz = noise(10_000, 3);
        let m0 = mix_at_snr(&sp, &nz, 0.0).unwrap();
        let p0 = mean_power(&m0.scaled_noise);
        assert!((10.0 * (p0 / active_power(&sp).unwrap()).log10()).abs() < 0.01);
        let m20 = mix_at_snr(&sp, &nz, 20.0).unwrap();
        let ratio = mean_power(&m20.scaled_noise) / active_power(&sp).unwrap();
        assert!((ratio - 0.01).abs() < 1e-12);
    }

    #[test]
    fn achieved_snr_matches_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..20 {
            let sp = noise(20_000 + i * 7, 10 + i as u64);
            let nz = noise(3_000 + i * 13, 100 + i as u64);
            let snr = rng.random_range(0.0..20.0);
            let off = rng.random_range(0..nz.len());
            let m = mix_at_snr_with_offset(&sp, &nz, snr, off).unwrap();
            assert!((snr_of(&sp, &m.mixture) - snr).abs() < 0.1);
        }
    }

    #[test]
    fn silent_inputs_rejected() {
        let sp = noise(1000, 5);
        assert!(mix_at_snr(&sp, &Waveform::zeros(100, 48_000), 5.0).is_err());
        assert!(mix_at_snr(&Waveform::zeros(1000, 48_000), &sp, 5.0).is_err());
    }
}
