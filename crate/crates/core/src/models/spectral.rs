use std::f64::consts::PI;

use candle_core::{DType, Device, Tensor};
use realfft::num_complex::Complex64;

use crate::audio::{ComplexSpectrogram, StftConfig};
use crate::error::{Error, Result};
use crate::nn::ComplexTensor;

/// Bins seen by the networks: the Nyquist bin is dropped on the way in and
/// restored as zero on the way out.
pub const MODEL_BINS: usize = 512;

/// Stacks spectrograms with equal frame counts into `[B, T, 2, bins]`.
pub fn spectra_to_tensor(
    specs: &[&ComplexSpectrogram],
    dtype: DType,
    device: &Device,
) -> Result<ComplexTensor> {
    let first = specs
        .first()
        .ok_or_else(|| Error::invalid("no spectrograms to stack"))?;
    let (t, f) = (first.frames(), first.bins());
    let mut re = Vec::with_capacity(specs.len() * t * f);
    let mut im = Vec::with_capacity(specs.len() * t * f);
    for s in specs {
        if s.frames() != t || s.bins() != f {
            return Err(Error::Shape(format!(
                "spectrogram {}x{} does not match {t}x{f}",
                s.frames(),
                s.bins()
            )));
        }
        re.extend(s.values().iter().map(|v| v.re));
        im.extend(s.values().iter().map(|v| v.im));
    }
    let b = specs.len();
    let re = Tensor::from_vec(re, (b, t, 1, f), device)?.to_dtype(dtype)?;
    let im = Tensor::from_vec(im, (b, t, 1, f), device)?.to_dtype(dtype)?;
    ComplexTensor::from_parts(&re, &im)
}

/// Inverse of [`spectra_to_tensor`].
pub fn spectra_from_tensor(
    x: &ComplexTensor,
    config: StftConfig,
    signal_len: usize,
) -> Result<Vec<ComplexSpectrogram>> {
    let (b, t, c, f) = x.dims();
    if c != 1 || f != config.bins() {
        return Err(Error::Shape(format!(
            "expected [B, T, 1, {}] complex spectra, got {c} channels x {f} bins",
            config.bins()
        )));
    }
    let re: Vec<f64> = x.re()?.to_dtype(DType::F64)?.flatten_all()?.to_vec1()?;
    let im: Vec<f64> = x.im()?.to_dtype(DType::F64)?.flatten_all()?.to_vec1()?;
    (0..b)
        .map(|i| {
            let range = i * t * f..(i + 1) * t * f;
            let values = re[range.clone()]
                .iter()
                .zip(&im[range])
                .map(|(&r, &m)| Complex64::new(r, m))
                .collect();
            ComplexSpectrogram::new(values, t, config, signal_len)
        })
        .collect()
}

/// Differentiable inverse STFT matching [`crate::audio::istft`]: per-frame
/// inverse real DFT as a matrix product with the synthesis window folded in,
/// then overlap-add of frame halves.
#[derive(Debug, Clone)]
pub struct TensorIstft {
    basis_re: Tensor,
    basis_im: Tensor,
    hop: usize,
    bins: usize,
}

impl TensorIstft {
    pub fn new(config: &StftConfig, dtype: DType, device: &Device) -> Result<Self> {
        config.validate()?;
        let frame = config.frame_len()?;
        let hop = config.hop_len()?;
        let n = config.fft_size;
        let bins = config.bins();
        let window = config.window.coefficients(frame);
        let mut re = vec![0.0; bins * frame];
        let mut im = vec![0.0; bins * frame];
        for k in 0..bins {
            let weight = if k == 0 || k == bins - 1 { 1.0 } else { 2.0 };
            for (m, w) in window.iter().enumerate() {
                let phase = 2.0 * PI * (k * m % n) as f64 / n as f64;
                re[k * frame + m] = weight * phase.cos() * w / n as f64;
                if k != 0 && k != bins - 1 {
                    im[k * frame + m] = -weight * phase.sin() * w / n as f64;
                }
            }
        }
        Ok(Self {
            basis_re: Tensor::from_vec(re, (bins, frame), device)?.to_dtype(dtype)?,
            basis_im: Tensor::from_vec(im, (bins, frame), device)?.to_dtype(dtype)?,
            hop,
            bins,
        })
    }

    /// `x: [B, T, 1, bins]` to waveforms `[B, signal_len]`.
    pub fn forward(&self, x: &ComplexTensor, signal_len: usize) -> Result<Tensor> {
        let (b, t, c, f) = x.dims();
        if c != 1 || f != self.bins {
            return Err(Error::Shape(format!(
                "inverse STFT expects one channel of {} bins",
                self.bins
            )));
        }
        let re = x.re()?.reshape((b * t, f))?;
        let im = x.im()?.reshape((b * t, f))?;
        let frames = (re.matmul(&self.basis_re)? + im.matmul(&self.basis_im)?)?.reshape((
            b,
            t,
            2 * self.hop,
        ))?;
        let head = frames.narrow(2, 0, self.hop)?.pad_with_zeros(1, 0, 1)?;
        let tail = frames
            .narrow(2, self.hop, self.hop)?
            .pad_with_zeros(1, 1, 0)?;
        let ola = (head + tail)?.reshape((b, (t + 1) * self.hop))?;
        let avail = t * self.hop;
        if signal_len > avail {
            return Err(Error::Shape(format!(
                "{t} frames cover {avail} samples, asked for {signal_len}"
            )));
        }
        Ok(ola.narrow(1, self.hop, signal_len)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{istft, stft, Waveform};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_istft_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = StftConfig::default();
        let w = Waveform::new(
            (0..7_000).map(|_| rng.random_range(-1.0..1.0)).collect(),
            48_000,
        )
        .unwrap();
        let mut s = stft(&w, &cfg).unwrap();
        // Make it inconsistent so that the synthesis path itself is tested.
        for v in s.values_mut() {
            *v *= Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5));
        }
        let want = istft(&s).unwrap();
        let x = spectra_to_tensor(&[&s], DType::F64, &Device::Cpu).unwrap();
        let back = spectra_from_tensor(&x, cfg, w.len()).unwrap();
        assert_eq!(back[0].values(), s.values());
        let ist = TensorIstft::new(&cfg, DType::F64, &Device::Cpu).unwrap();
        let got: Vec<f64> = ist
            .forward(&x, w.len())
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        for (a, b) in got.iter().zip(want.samples()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
