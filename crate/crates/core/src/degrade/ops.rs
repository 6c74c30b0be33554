use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{fir_filter_same, kaiser_lowpass, resample, LowpassDesign, Waveform};
use crate::error::{Error, Result};

/// Band-limits `w` to `target_rate`: a linear-phase lowpass with its passband
/// edge at 90% of the target Nyquist, then down- and back up-sampling.
pub fn apply_lowpass_coloration(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    let rate = w.sample_rate();
    if target_rate == 0 || target_rate >= rate {
        return Err(Error::invalid(format!(
            "lowpass target {target_rate} Hz must be below the signal rate {rate} Hz"
        )));
    }
    let design = LowpassDesign::below_nyquist(target_rate as f64 / 2.0, rate as f64);
    let h = kaiser_lowpass(&design)?;
    let filtered = Waveform::new(fir_filter_same(w.samples(), &h), rate)?;
    let low = resample(&filtered, target_rate)?;
    Ok(resample(&low, rate)?.with_len(w.len()))
}

pub fn apply_clipping(w: &Waveform, eta: f64) -> Result<Waveform> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid(format!(
            "clipping threshold {eta} not in (0, 1)"
        )));
    }
    Ok(w.map(|s| s.clamp(-eta, eta)))
}

/// Zero/keep decision for each aligned window, drawn from `mask_seed`.
pub fn discontinuity_mask(windows: usize, zero_prob: f64, mask_seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    (0..windows).map(|_| rng.random_bool(zero_prob)).collect()
}

/// Splits `w` into non-overlapping windows aligned to its start and zeroes
/// each independently with probability `zero_prob`. Returns the signal and
/// the number of zeroed windows.
pub fn apply_discontinuity(
    w: &Waveform,
    window_ms: f64,
    zero_prob: f64,
    mask_seed: u64,
) -> Result<(Waveform, usize)> {
    if !(0.0..=1.0).contains(&zero_prob) {
        return Err(Error::invalid("zero probability must be in [0, 1]"));
    }
    let win = (w.sample_rate() as f64 * window_ms / 1000.0).round() as usize;
    if win == 0 || w.len() <= win {
        return Err(Error::invalid(format!(
            "signal of {} samples is not longer than one {window_ms} ms window",
            w.len()
        )));
    }
    let windows = w.len().div_ceil(win);
    let mask = discontinuity_mask(windows, zero_prob, mask_seed);
    let mut samples = w.samples().to_vec();
    for (chunk, &zero) in samples.chunks_mut(win).zip(&mask) {
        if zero {
            chunk.iter_mut().for_each(|s| *s = 0.0);
        }
    }
    let zeroed = mask.iter().filter(|&&z| z).count();
    Ok((Waveform::new(samples, w.sample_rate())?, zeroed))
}

pub fn apply_gain(w: &Waveform, scale: f64) -> Result<Waveform> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("gain must be positive"));
    }
    Ok(w.scaled(scale))
}

/// Multiplies by a scale drawn uniformly from `range`; returns the scale too.
pub fn apply_loudness<R: Rng>(
    w: &Waveform,
    range: (f64, f64),
    rng: &mut R,
) -> Result<(Waveform, f64)> {
    let scale = if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    };
    Ok((apply_gain(w, scale)?, scale))
}
