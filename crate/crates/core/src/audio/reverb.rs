use realfft::RealFftPlanner;

use super::Waveform;
use crate::error::{Error, Result};

/// Convolves `w` with a room impulse response, keeps the first `w.len()`
/// samples and rescales the result to the dry signal's peak.
pub fn convolve_rir(w: &Waveform, rir: &Waveform) -> Result<Waveform> {
    w.ensure_rate(rir)?;
    if rir.is_empty() {
        return Err(Error::invalid("empty impulse response"));
    }
    if w.is_empty() {
        return Ok(w.clone());
    }
    let full = fft_convolve(w.samples(), rir.samples())?;
    let mut wet: Vec<f64> = full.into_iter().take(w.len()).collect();
    let dry_peak = w.peak();
    let wet_peak = wet.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if wet_peak > 0.0 {
        let g = dry_peak / wet_peak;
        wet.iter_mut().for_each(|s| *s *= g);
    }
    Waveform::new(wet, w.sample_rate())
}

pub(crate) fn fft_convolve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut xa = vec![0.0; n];
    xa[..a.len()].copy_from_slice(a);
    let mut xb = vec![0.0; n];
    xb[..b.len()].copy_from_slice(b);
    let mut fa = fwd.make_output_vec();
    let mut fb = fwd.make_output_vec();
    let err = |e: realfft::FftError| Error::Numerical(e.to_string());
    fwd.process(&mut xa, &mut fa).map_err(err)?;
    fwd.process(&mut xb, &mut fb).map_err(err)?;
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fa[0].im = 0.0;
    fa[n / 2].im = 0.0;
    let mut out = vec![0.0; n];
    inv.process(&mut fa, &mut out).map_err(err)?;
    out.truncate(out_len);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(v: Vec<f64>) -> Waveform {
        Waveform::new(v, 48_000).unwrap()
    }

    #[test]
    fn unit_impulse_is_identity() {
        let x = wave((0..300).map(|i| ((i as f64) * 0.37).sin() * 0.8).collect());
        let y = convolve_rir(&x, &wave(vec![1.0])).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn scaled_impulse_is_renormalized() {
        let x = wave(vec![0.1, -0.7, 0.3, 0.2]);
        let y = convolve_rir(&x, &wave(vec![0.5])).unwrap();
        assert!((y.peak() - 0.7).abs() < 1e-12);
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_tap_matches_direct_convolution() {
        let x: Vec<f64> = vec![0.2, -0.4, 0.6, 0.1, -0.3];
        let h = vec![1.0, 0.5];
        let mut direct = vec![0.0f64; x.len()];
        for n in 0..x.len() {
            for (k, hk) in h.iter().enumerate() {
                if n >= k {
                    direct[n] += hk * x[n - k];
                }
            }
        }
        let peak = direct.iter().fold(0.0f64, |m: f64, v| m.max(v.abs()));
        let y = convolve_rir(&wave(x), &wave(h)).unwrap();
        for (d, v) in direct.iter().zip(y.samples()) {
            assert!((d * 0.6 / peak - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_mismatch_rejected() {
        let x = wave(vec![0.1; 10]);
        let h = Waveform::new(vec![1.0], 16_000).unwrap();
        assert!(convolve_rir(&x, &h).is_err());
    }
}
