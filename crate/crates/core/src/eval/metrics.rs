use crate::audio::ComplexSpectrogram;
use crate::error::{Error, Result};

/// Magnitude floor applied before taking logs.
pub const LSD_FLOOR: f64 = 1e-8;

/// Log-spectral distance in dB: per frame, the RMS over bins of the
/// difference of `20 log10 max(|X|, floor)`; then the mean over frames.
pub fn lsd(est: &ComplexSpectrogram, reference: &ComplexSpectrogram) -> Result<f64> {
    if est.frames() != reference.frames() || est.bins() != reference.bins() {
        return Err(Error::Shape(format!(
            "LSD needs equal shapes, got {}x{} and {}x{}",
            est.frames(),
            est.bins(),
            reference.frames(),
            reference.bins()
        )));
    }
    if est.frames() == 0 {
        return Err(Error::invalid("LSD of an empty spectrogram"));
    }
    let db = |v: f64| 20.0 * v.max(LSD_FLOOR).log10();
    let mut total = 0.0;
    for t in 0..est.frames() {
        let sq: f64 = est
            .frame(t)
            .iter()
            .zip(reference.frame(t))
            .map(|(a, b)| (db(a.norm()) - db(b.norm())).powi(2))
            .sum();
        total += (sq / est.bins() as f64).sqrt();
    }
    Ok(total / est.frames() as f64)
}

/// Fraction of samples at or above `threshold` in magnitude.
pub fn clipped_fraction(samples: &[f64], threshold: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|s| s.abs() >= threshold).count() as f64 / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{stft, StftConfig, Waveform};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(seed: u64) -> ComplexSpectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Waveform::new(
            (0..4_800).map(|_| rng.random_range(-0.5..0.5)).collect(),
            48_000,
        )
        .unwrap();
        stft(&w, &StftConfig::default()).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let s = spec(1);
        assert_eq!(lsd(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn tenfold_magnitude_is_20_db() {
        let s = spec(2);
        let mut t = s.clone();
        t.values_mut().iter_mut().for_each(|v| *v *= 10.0);
        // Bins below the floor would break the identity; there are none here.
        assert!(s.values().iter().all(|v| v.norm() > 1e-6));
        assert!((lsd(&t, &s).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn matches_double_loop() {
        let (a, b) = (spec(3), spec(4));
        let mut total = 0.0;
        for t in 0..a.frames() {
            let mut acc = 0.0;
            for k in 0..a.bins() {
                let x = 10.0 * a.get(t, k).norm_sqr().max(1e-16).log10();
                let y = 10.0 * b.get(t, k).norm_sqr().max(1e-16).log10();
                acc += (x - y) * (x - y);
            }
            total += (acc / a.bins() as f64).sqrt();
        }
        let want = total / a.frames() as f64;
        assert!((lsd(&a, &b).unwrap() - want).abs() < 1e-9);
    }
}
