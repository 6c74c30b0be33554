//! Kaiser-windowed sinc filters and a zero-phase rational resampler.

use std::f64::consts::PI;

use super::Waveform;
use crate::error::{Error, Result};

/// Lowpass specification in Hz at a given sample rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowpassDesign {
    pub pass_edge_hz: f64,
    pub stop_edge_hz: f64,
    pub attenuation_db: f64,
    pub sample_rate: f64,
}

impl LowpassDesign {
    /// Passband edge at 90% of `nyquist_hz`, stopband from `nyquist_hz` on.
    pub fn below_nyquist(nyquist_hz: f64, sample_rate: f64) -> Self {
        Self {
            pass_edge_hz: 0.9 * nyquist_hz,
            stop_edge_hz: nyquist_hz,
            attenuation_db: 80.0,
            sample_rate,
        }
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Odd-length linear-phase lowpass with unit DC gain.
pub fn kaiser_lowpass(d: &LowpassDesign) -> Result<Vec<f64>> {
    if !(d.pass_edge_hz > 0.0 && d.stop_edge_hz > d.pass_edge_hz) {
        return Err(Error::invalid("lowpass edges must satisfy 0 < pass < stop"));
    }
    if d.stop_edge_hz > d.sample_rate / 2.0 + 1e-9 {
        return Err(Error::invalid("stopband edge above Nyquist"));
    }
    let a = d.attenuation_db;
    let beta = if a > 50.0 {
        0.1102 * (a - 8.7)
    } else if a >= 21.0 {
        0.5842 * (a - 21.0).powf(0.4) + 0.07886 * (a - 21.0)
    } else {
        0.0
    };
    let width = (d.stop_edge_hz - d.pass_edge_hz) / d.sample_rate;
    let mut taps = ((a - 7.95) / (14.36 * width)).ceil() as usize + 1;
    if taps.is_multiple_of(2) {
        taps += 1;
    }
    let fc = 0.5 * (d.pass_edge_hz + d.stop_edge_hz) / d.sample_rate;
    let m = (taps - 1) as f64 / 2.0;
    let i0b = bessel_i0(beta);
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let x = n as f64 - m;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * x).sin() / (PI * x)
            };
            let r = x / m;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
            sinc * w
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    Ok(h)
}

/// Zero-phase FIR filtering; output has the input's length.
pub fn fir_filter_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let d = (h.len() - 1) / 2;
    (0..x.len())
        .map(|n| {
            // y[n] = sum_k h[k] x[n + d - k]
            let lo = (n + d + 1).saturating_sub(x.len());
            let hi = (n + d).min(h.len() - 1);
            let mut acc = 0.0;
            for k in lo..=hi {
                acc += h[k] * x[n + d - k];
            }
            acc
        })
        .collect()
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Rational polyphase resampling with a Kaiser anti-alias / anti-image filter
/// whose stopband starts at the lower of the two Nyquist frequencies. The
/// filter delay is compensated so output sample `m` lines up with input time
/// `m / target_rate`.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::invalid("target rate must be positive"));
    }
    let src = w.sample_rate();
    if src == target_rate {
        return Ok(w.clone());
    }
    let g = gcd(src as u64, target_rate as u64);
    let up = (target_rate as u64 / g) as usize;
    let down = (src as u64 / g) as usize;
    let fs_up = src as f64 * up as f64;
    let nyq = src.min(target_rate) as f64 / 2.0;
    let h = kaiser_lowpass(&LowpassDesign::below_nyquist(nyq, fs_up))?;
    let delay = (h.len() - 1) / 2;
    let x = w.samples();
    let out_len = (x.len() * up).div_ceil(down);
    let gain = up as f64;
    let samples = (0..out_len)
        .map(|m| {
            // Upsampled-domain position of output sample m, shifted by the
            // filter delay: y[m] = up * sum_j x[j] h[p - j*up].
            let p = m * down + delay;
            let j_hi = (p / up).min(x.len().saturating_sub(1));
            let j_lo = (p + 1).saturating_sub(h.len()).div_ceil(up);
            let mut acc = 0.0;
            if j_lo <= j_hi {
                for j in j_lo..=j_hi {
                    acc += x[j] * h[p - j * up];
                }
            }
            acc * gain
        })
        .collect();
    Waveform::new(samples, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use realfft::RealFftPlanner;

    fn sine(freq: f64, rate: u32, len: usize) -> Waveform {
        Waveform::new(
            (0..len)
                .map(|n| (2.0 * PI * freq * n as f64 / rate as f64).sin())
                .collect(),
            rate,
        )
        .unwrap()
    }

    /// Least-squares amplitude of a known-frequency sinusoid.
    fn fit_amplitude(x: &[f64], freq: f64, rate: f64) -> f64 {
        let (mut ss, mut sc, mut cc, mut xs, mut xc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (n, v) in x.iter().enumerate() {
            let ph = 2.0 * PI * freq * n as f64 / rate;
            let (s, c) = ph.sin_cos();
            ss += s * s;
            sc += s * c;
            cc += c * c;
            xs += v * s;
            xc += v * c;
        }
        let det = ss * cc - sc * sc;
        let a = (xs * cc - xc * sc) / det;
        let b = (xc * ss - xs * sc) / det;
        (a * a + b * b).sqrt()
    }

    #[test]
    fn same_rate_is_identity() {
        let w = sine(440.0, 48_000, 1000);
        assert_eq!(resample(&w, 48_000).unwrap(), w);
        assert!(resample(&w, 0).is_err());
    }

    #[test]
    fn halving_rate_halves_length() {
        for len in [48_000usize, 48_001, 12_345] {
            let w = sine(440.0, 48_000, len);
            let y = resample(&w, 24_000).unwrap();
            assert!((y.len() as i64 - (len / 2) as i64).abs() <= 1);
            assert_eq!(y.sample_rate(), 24_000);
        }
    }

    #[test]
    fn sine_survives_downsampling() {
        let w = sine(1000.0, 48_000, 48_000);
        let y = resample(&w, 8_000).unwrap();
        // Ignore the filter edge transients.
        let core = &y.samples()[400..y.len() - 400];
        let amp = fit_amplitude(core, 1000.0, 8_000.0);
        assert!((amp - 1.0).abs() < 0.01, "amplitude {amp}");
    }

    #[test]
    fn content_above_new_nyquist_is_suppressed() {
        // 5 kHz tone is above the 4 kHz Nyquist of an 8 kHz target.
        let w = sine(5000.0, 48_000, 48_000);
        let y = resample(&w, 8_000).unwrap();
        let core = &y.samples()[400..y.len() - 400];
        let rms = (core.iter().map(|v| v * v).sum::<f64>() / core.len() as f64).sqrt();
        let db = 20.0 * (rms / (0.5f64).sqrt()).log10();
        assert!(db < -60.0, "{db} dB");
    }

    #[test]
    fn kaiser_stopband_meets_spec() {
        let d = LowpassDesign::below_nyquist(2000.0, 48_000.0);
        let h = kaiser_lowpass(&d).unwrap();
        let n = 1 << 16;
        let mut buf = vec![0.0; n];
        buf[..h.len()].copy_from_slice(&h);
        let mut planner = RealFftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let mut out = fft.make_output_vec();
        fft.process(&mut buf, &mut out).unwrap();
        for (k, v) in out.iter().enumerate() {
            let f = k as f64 * 48_000.0 / n as f64;
            if f >= d.stop_edge_hz {
                assert!(20.0 * v.norm().log10() < -60.0, "{f} Hz");
            }
            if f <= d.pass_edge_hz {
                assert!((v.norm() - 1.0).abs() < 1e-3, "{f} Hz");
            }
        }
    }

    #[test]
    fn fir_same_matches_direct_convolution() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let h = vec![0.25, 0.5, 0.25];
        let y = fir_filter_same(&x, &h);
        for (n, yn) in y.iter().enumerate() {
            let mut acc = 0.0;
            for (k, hk) in h.iter().enumerate() {
                let idx = n as isize + 1 - k as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += hk * x[idx as usize];
                }
            }
            assert!((acc - yn).abs() < 1e-12);
        }
    }
}
