use std::f64::consts::PI;

use realfft::num_complex::Complex64;
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use super::{Waveform, FULLBAND_RATE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Square-root periodic Hann used for both analysis and synthesis. At 50%
    /// overlap the squared window sums to exactly one.
    #[default]
    SqrtHann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::SqrtHann => (0..len)
                .map(|n| (0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).sqrt())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub fft_size: usize,
    #[serde(default)]
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            sample_rate: FULLBAND_RATE,
            frame_ms: 20.0,
            hop_ms: 10.0,
            fft_size: 1024,
            window: Window::SqrtHann,
        }
    }
}

fn ms_to_samples(ms: f64, rate: u32) -> Result<usize> {
    let n = ms * rate as f64 / 1000.0;
    if n <= 0.0 || (n - n.round()).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "{ms} ms is not a whole number of samples at {rate} Hz"
        )));
    }
    Ok(n.round() as usize)
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        let frame = self.frame_len()?;
        let hop = self.hop_len()?;
        if hop > frame {
            return Err(Error::invalid("hop must not exceed the frame length"));
        }
        if self.fft_size < frame {
            return Err(Error::invalid("fft size must be at least the frame length"));
        }
        if frame != 2 * hop {
            // The synthesis path assumes a unit overlap-add sum, which the
            // square-root Hann pair only guarantees at exactly 50% overlap.
            return Err(Error::invalid("frame length must be twice the hop"));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> Result<usize> {
        ms_to_samples(self.frame_ms, self.sample_rate)
    }

    pub fn hop_len(&self) -> Result<usize> {
        ms_to_samples(self.hop_ms, self.sample_rate)
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> Result<usize> {
        let hop = self.hop_len()?;
        Ok(len.div_ceil(hop) + 1)
    }
}

/// Complex STFT values stored frame-major (`values[frame * bins + bin]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    values: Vec<Complex64>,
    frames: usize,
    config: StftConfig,
    signal_len: usize,
}

impl ComplexSpectrogram {
    pub fn new(
        values: Vec<Complex64>,
        frames: usize,
        config: StftConfig,
        signal_len: usize,
    ) -> Result<Self> {
        config.validate()?;
        if values.len() != frames * config.bins() {
            return Err(Error::Shape(format!(
                "expected {} values for {frames} frames, got {}",
                frames * config.bins(),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::invalid("non-finite spectrogram value"));
        }
        Ok(Self {
            values,
            frames,
            config,
            signal_len,
        })
    }

    pub fn zeros(frames: usize, config: StftConfig, signal_len: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); frames * config.bins()],
            frames,
            config,
            signal_len,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.config.bins()
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// Length of the time-domain signal this spectrogram resynthesizes to.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let b = self.bins();
        &self.values[t * b..(t + 1) * b]
    }

    pub fn get(&self, t: usize, k: usize) -> Complex64 {
        self.values[t * self.bins() + k]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// Analysis with square-root Hann frames of `frame_len` samples, zero-padded
/// to `fft_size`. The signal is padded by one hop on the left and enough zeros
/// on the right that every input sample is covered by two frames.
pub fn stft(w: &Waveform, c: &StftConfig) -> Result<ComplexSpectrogram> {
    c.validate()?;
    if w.sample_rate() != c.sample_rate {
        return Err(Error::invalid(format!(
            "waveform rate {} does not match stft rate {}",
            w.sample_rate(),
            c.sample_rate
        )));
    }
    if w.is_empty() {
        return Err(Error::invalid("cannot transform an empty signal"));
    }
    let frame_len = c.frame_len()?;
    let hop = c.hop_len()?;
    let frames = c.num_frames(w.len())?;
    let window = c.window.coefficients(frame_len);
    let bins = c.bins();

    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(c.fft_size);
    let mut input = fft.make_input_vec();
    let mut output = fft.make_output_vec();
    let mut scratch = fft.make_scratch_vec();
    let samples = w.samples();
    let mut values = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        input.iter_mut().for_each(|v| *v = 0.0);
        let start = (t * hop) as isize - hop as isize;
        for (n, win) in window.iter().enumerate() {
            let idx = start + n as isize;
            if idx >= 0 && (idx as usize) < samples.len() {
                input[n] = samples[idx as usize] * win;
            }
        }
        fft.process_with_scratch(&mut input, &mut output, &mut scratch)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        values.extend_from_slice(&output);
    }
    Ok(ComplexSpectrogram {
        values,
        frames,
        config: *c,
        signal_len: w.len(),
    })
}

/// Inverse transform of every frame followed by synthesis windowing and
/// overlap-add, without trimming the analysis padding.
pub fn overlap_add_frames(s: &ComplexSpectrogram) -> Result<Vec<f64>> {
    let c = s.config;
    let frame_len = c.frame_len()?;
    let hop = c.hop_len()?;
    let window = c.window.coefficients(frame_len);
    let mut planner = RealFftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(c.fft_size);
    let mut spec = ifft.make_input_vec();
    let mut frame = ifft.make_output_vec();
    let mut scratch = ifft.make_scratch_vec();
    let norm = 1.0 / c.fft_size as f64;
    let bins = c.bins();

    let total = if s.frames == 0 {
        0
    } else {
        (s.frames - 1) * hop + frame_len
    };
    let mut out = vec![0.0; total];
    for t in 0..s.frames {
        spec.copy_from_slice(s.frame(t));
        // A real signal has purely real DC and Nyquist bins.
        spec[0].im = 0.0;
        spec[bins - 1].im = 0.0;
        ifft.process_with_scratch(&mut spec, &mut frame, &mut scratch)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let base = t * hop;
        for (n, win) in window.iter().enumerate() {
            out[base + n] += frame[n] * norm * win;
        }
    }
    Ok(out)
}

/// Synthesis matching [`stft`]: overlap-add, drop the one-hop lead-in, cut to
/// the recorded signal length.
pub fn istft(s: &ComplexSpectrogram) -> Result<Waveform> {
    let hop = s.config.hop_len()?;
    let ola = overlap_add_frames(s)?;
    let mut samples: Vec<f64> = ola.into_iter().skip(hop).collect();
    samples.resize(s.signal_len, 0.0);
    Waveform::new(samples, s.config.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_wave(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new(
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            48_000,
        )
        .unwrap()
    }

    #[test]
    fn zero_signal_gives_zero_spectrogram() {
        let w = Waveform::zeros(48_000, 48_000);
        let s = stft(&w, &StftConfig::default()).unwrap();
        assert!((99..=101).contains(&s.frames()));
        assert_eq!(s.bins(), 513);
        assert!(s.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rejects_empty_and_mismatched_rate() {
        let c = StftConfig::default();
        assert!(stft(&Waveform::zeros(0, 48_000), &c).is_err());
        assert!(stft(&Waveform::zeros(100, 16_000), &c).is_err());
        assert!(Waveform::new(vec![0.0, f64::NAN], 48_000).is_err());
    }

    #[test]
    fn window_pair_sums_to_one_at_half_overlap() {
        let w = Window::SqrtHann.coefficients(960);
        for n in 0..480 {
            let s = w[n] * w[n] + w[n + 480] * w[n + 480];
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bin_centred_sine_concentrates_in_main_lobe() {
        let c = StftConfig::default();
        let k = 64usize;
        let f = k as f64 * 48_000.0 / 1024.0;
        let w = Waveform::new(
            (0..24_000)
                .map(|n| (2.0 * PI * f * n as f64 / 48_000.0).sin())
                .collect(),
            48_000,
        )
        .unwrap();
        let s = stft(&w, &c).unwrap();
        // Direct DFT of one windowed, zero-padded interior frame.
        let t = 10;
        let win = Window::SqrtHann.coefficients(960);
        let start = t * 480 - 480;
        for bin in [k - 1, k, k + 1] {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, wn) in win.iter().enumerate() {
                let x = w.samples()[start + n] * wn;
                let ph = -2.0 * PI * (bin * n) as f64 / 1024.0;
                acc += Complex64::new(ph.cos(), ph.sin()) * x;
            }
            assert!((acc - s.get(t, bin)).norm() < 1e-8 * acc.norm().max(1.0));
        }
        for t in 2..s.frames() - 2 {
            let e: Vec<f64> = s.frame(t).iter().map(|v| v.norm_sqr()).collect();
            let total: f64 = e.iter().sum();
            let lobe = e[k - 1] + e[k] + e[k + 1];
            assert!(lobe / total >= 0.95, "frame {t}: {}", lobe / total);
            assert!(e[k] > e[k - 1] && e[k] > e[k + 1]);
        }
    }

    #[test]
    fn round_trip_reconstructs() {
        let c = StftConfig::default();
        for (i, len) in [24_000usize, 47_999, 100_003].iter().enumerate() {
            let w = random_wave(*len, i as u64);
            let y = istft(&stft(&w, &c).unwrap()).unwrap();
            assert_eq!(y.len(), w.len());
            let err: f64 = w.sub(&y).unwrap().energy();
            assert!((err / w.energy()).sqrt() < 1e-6);
        }
    }

    #[test]
    fn single_frame_is_windowed_inverse() {
        let c = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<Complex64> = (0..513)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let s = ComplexSpectrogram::new(values.clone(), 1, c, 0).unwrap();
        let ola = overlap_add_frames(&s).unwrap();
        assert_eq!(ola.len(), 960);
        let win = Window::SqrtHann.coefficients(960);
        for (n, (o, wn)) in ola.iter().zip(&win).enumerate().step_by(37) {
            // Direct inverse real DFT.
            let mut acc = values[0].re + values[512].re * if n % 2 == 0 { 1.0 } else { -1.0 };
            for (k, v) in values.iter().enumerate().take(512).skip(1) {
                let ph = 2.0 * PI * (k * n) as f64 / 1024.0;
                acc += 2.0 * (v.re * ph.cos() - v.im * ph.sin());
            }
            assert!((o - acc / 1024.0 * wn).abs() < 1e-10);
        }
    }

    #[test]
    fn resynthesis_is_a_projection() {
        let c = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let frames = 40;
        let values: Vec<Complex64> = (0..frames * 513)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let s = ComplexSpectrogram::new(values, frames, c, (frames - 1) * 480).unwrap();
        let p1 = stft(&istft(&s).unwrap(), &c).unwrap();
        let p2 = stft(&istft(&p1).unwrap(), &c).unwrap();
        assert_eq!(p1.frames(), frames);
        let num: f64 = p1
            .values()
            .iter()
            .zip(p2.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = p1.values().iter().map(|a| a.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-6);
    }
}
