use candle_core::Tensor;

use super::complex::ComplexTensor;
use super::conv1d::shifted_matmuls;
use super::ops::sigmoid;
use super::params::ParamStore;
use crate::error::{Error, Result};

/// Kernel and stride of a time-causal 2-D convolution. `stride_f` subsamples
/// frequency; with `up` the layer instead upsamples frequency by `stride_f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub kernel_f: usize,
    pub kernel_t: usize,
    pub stride_f: usize,
    pub up: bool,
}

impl ConvSpec {
    pub fn new(kernel_f: usize, kernel_t: usize, stride_f: usize) -> Self {
        Self {
            kernel_f,
            kernel_t,
            stride_f,
            up: false,
        }
    }

    pub fn upsampling(self) -> Self {
        Self { up: true, ..self }
    }

    pub fn out_bins(&self, bins: usize) -> usize {
        if self.up {
            bins * self.stride_f
        } else {
            bins.div_ceil(self.stride_f)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kernel_f == 0 || self.kernel_t == 0 || self.stride_f == 0 {
            return Err(Error::Shape("kernel and stride must be positive".into()));
        }
        Ok(())
    }
}

/// Time-causal convolution of `x: [B, T, Ci, F]` with `w: [Co, Ci, kf, kt]`.
///
/// Output frame t sees input frames t-kt+1..=t. Frequency is padded so that
/// a stride s gives ceil(F/s) bins; upsampling is equivalent to inserting
/// s-1 zeros after every bin and convolving with stride one, giving s·F bins.
///
/// Internally the input is moved to channels-last rows `(b, t, f)`; every
/// kernel tap is then one matrix product on a row-shifted window, with a
/// time step being a shift by one padded frame.
pub fn conv_freq(x: &Tensor, w: &Tensor, b: Option<&Tensor>, spec: ConvSpec) -> Result<Tensor> {
    spec.validate()?;
    let (bsz, t, ci, f) = x.dims4()?;
    let (co, wci, kf, kt) = w.dims4()?;
    if wci != ci || kf != spec.kernel_f || kt != spec.kernel_t {
        return Err(Error::Shape(format!(
            "input with {ci} channels does not fit kernel {:?}",
            w.dims()
        )));
    }
    let s = spec.stride_f;
    // Tap matrices [kt, kf, Ci, Co].
    let wt = w.permute((3, 2, 1, 0))?;
    let xt = x.transpose(2, 3)?;
    let left = (kf - 1) / 2;
    let y = if spec.up && s > 1 {
        conv_up(&xt, &wt.contiguous()?, s, left)?
    } else {
        let s = if spec.up { 1 } else { s };
        let out_f = f.div_ceil(s);
        let kfold = kf.div_ceil(s);
        let ff = (out_f + kfold - 1).max((f + left).div_ceil(s));
        let xp = xt
            .pad_with_zeros(2, left, ff * s - f - left)?
            .pad_with_zeros(1, kt - 1, 0)?
            .contiguous()?;
        let tp = t + kt - 1;
        let rows = xp.reshape((bsz * tp * ff, s * ci))?;
        let wf = wt
            .pad_with_zeros(1, 0, kfold * s - kf)?
            .reshape((kt, kfold, s * ci, co))?
            .contiguous()?;
        let mut taps = Vec::with_capacity(kt * kfold);
        for dt in 0..kt {
            for m in 0..kfold {
                taps.push((dt * ff + m, wf.get(dt)?.get(m)?));
            }
        }
        shifted_matmuls(&rows, &taps)?
            .reshape((bsz, tp, ff, co))?
            .narrow(1, 0, t)?
            .narrow(2, 0, out_f)?
    };
    let y = match b {
        Some(b) => y.broadcast_add(&b.reshape((1, 1, 1, co))?)?,
        None => y,
    };
    Ok(y.transpose(2, 3)?.contiguous()?)
}

/// Upsampling branch on channels-last `xt: [B, T, F, Ci]`, returning
/// `[B, T, s·F, Co]`. Output phase p only meets the kernel taps j with
/// (p + j - left) divisible by s, reading input bin q + (p + j - left)/s.
fn conv_up(xt: &Tensor, wt: &Tensor, s: usize, left: usize) -> Result<Tensor> {
    let (bsz, t, f, _) = xt.dims4()?;
    let (kt, kf, _, co) = wt.dims4()?;
    let offset =
        |p: usize, j: usize| (p as isize + j as isize - left as isize).div_euclid(s as isize);
    let valid = |p: usize, j: usize| (p + j + s * kf - left).is_multiple_of(s);
    let pairs: Vec<(usize, usize)> = (0..s)
        .flat_map(|p| (0..kf).map(move |j| (p, j)))
        .filter(|&(p, j)| valid(p, j))
        .collect();
    let lo = pairs.iter().map(|&(p, j)| offset(p, j)).min().unwrap_or(0);
    let hi = pairs.iter().map(|&(p, j)| offset(p, j)).max().unwrap_or(0);
    let pad_l = (-lo).max(0) as usize;
    let pad_r = hi.max(0) as usize;
    let fp = f + pad_l + pad_r;
    let tp = t + kt - 1;
    let xp = xt
        .pad_with_zeros(2, pad_l, pad_r)?
        .pad_with_zeros(1, kt - 1, 0)?
        .contiguous()?;
    let rows = xp.reshape((bsz * tp * fp, ()))?;
    let mut phases = Vec::with_capacity(s);
    for p in 0..s {
        let mut taps = Vec::new();
        for j in (0..kf).filter(|&j| valid(p, j)) {
            let base = (offset(p, j) + pad_l as isize) as usize;
            for dt in 0..kt {
                taps.push((dt * fp + base, wt.get(dt)?.get(j)?));
            }
        }
        let y = if taps.is_empty() {
            Tensor::zeros((bsz, t, f, co), xt.dtype(), xt.device())?
        } else {
            shifted_matmuls(&rows, &taps)?
                .reshape((bsz, tp, fp, co))?
                .narrow(1, 0, t)?
                .narrow(2, 0, f)?
        };
        phases.push(y);
    }
    Ok(Tensor::stack(&phases, 3)?.reshape((bsz, t, f * s, co))?)
}

#[derive(Debug, Clone)]
pub struct RealConv {
    pub weight: Tensor,
    pub bias: Tensor,
    pub spec: ConvSpec,
}

impl RealConv {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        spec: ConvSpec,
    ) -> Result<Self> {
        let bound = 1.0 / ((in_ch * spec.kernel_f * spec.kernel_t) as f64).sqrt();
        let weight = ps.uniform(
            &format!("{name}.weight"),
            &[out_ch, in_ch, spec.kernel_f, spec.kernel_t],
            bound,
        )?;
        let bias = ps.uniform(&format!("{name}.bias"), &[out_ch], bound)?;
        Ok(Self { weight, bias, spec })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        conv_freq(x, &self.weight, Some(&self.bias), self.spec)
    }
}

/// Complex convolution (Xr*Wr - Xi*Wi) + j(Xr*Wi + Xi*Wr), optionally
/// multiplied by a sigmoid gate computed by a real convolution over the
/// stacked real and imaginary channels. One gate value per output element is
/// shared by the real and imaginary parts.
///
/// Channel counts are totals (real plus imaginary) and must be even.
#[derive(Debug, Clone)]
pub struct ComplexConv {
    pub w_re: Tensor,
    pub w_im: Tensor,
    pub b_re: Tensor,
    pub b_im: Tensor,
    pub gate: Option<(Tensor, Tensor)>,
    pub spec: ConvSpec,
}

impl ComplexConv {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        in_total: usize,
        out_total: usize,
        spec: ConvSpec,
        gated: bool,
    ) -> Result<Self> {
        if !in_total.is_multiple_of(2)
            || !out_total.is_multiple_of(2)
            || in_total == 0
            || out_total == 0
        {
            return Err(Error::Shape(format!(
                "complex conv needs positive even channel totals, got {in_total} -> {out_total}"
            )));
        }
        let (ci, co) = (in_total / 2, out_total / 2);
        let (kf, kt) = (spec.kernel_f, spec.kernel_t);
        let bound = 1.0 / ((ci * kf * kt) as f64).sqrt();
        let w_re = ps.uniform(&format!("{name}.real.weight"), &[co, ci, kf, kt], bound)?;
        let b_re = ps.uniform(&format!("{name}.real.bias"), &[co], bound)?;
        let w_im = ps.uniform(&format!("{name}.imag.weight"), &[co, ci, kf, kt], bound)?;
        let b_im = ps.uniform(&format!("{name}.imag.bias"), &[co], bound)?;
        let gate = if gated {
            let gb = 1.0 / ((in_total * kf * kt) as f64).sqrt();
            Some((
                ps.uniform(&format!("{name}.gate.weight"), &[co, in_total, kf, kt], gb)?,
                ps.uniform(&format!("{name}.gate.bias"), &[co], gb)?,
            ))
        } else {
            None
        };
        Ok(Self {
            w_re,
            w_im,
            b_re,
            b_im,
            gate,
            spec,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.w_re.dims()[0]
    }

    /// Block kernel acting on stacked [re; im] channels.
    fn block_kernel(&self) -> Result<(Tensor, Tensor)> {
        let neg_im = self.w_im.neg()?;
        let top = Tensor::cat(&[&self.w_re, &neg_im], 1)?;
        let bottom = Tensor::cat(&[&self.w_im, &self.w_re], 1)?;
        let w = Tensor::cat(&[&top, &bottom], 0)?;
        let b = Tensor::cat(&[(&self.b_re - &self.b_im)?, (&self.b_re + &self.b_im)?], 0)?;
        Ok((w, b))
    }

    pub fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let (w, b) = self.block_kernel()?;
        let co = self.out_channels();
        match &self.gate {
            None => ComplexTensor::new(conv_freq(x.data(), &w, Some(&b), self.spec)?),
            Some((gw, gb)) => {
                let w = Tensor::cat(&[&w, gw], 0)?;
                let b = Tensor::cat(&[&b, gb], 0)?;
                let y = conv_freq(x.data(), &w, Some(&b), self.spec)?;
                let feat = y.narrow(2, 0, 2 * co)?;
                let g = sigmoid(&y.narrow(2, 2 * co, co)?)?;
                ComplexTensor::new((feat * Tensor::cat(&[&g, &g], 2)?)?)
            }
        }
    }

    /// Gate pre-activations, exposed for inspection.
    pub fn gate_logits(&self, x: &ComplexTensor) -> Result<Option<Tensor>> {
        match &self.gate {
            None => Ok(None),
            Some((gw, gb)) => Ok(Some(conv_freq(x.data(), gw, Some(gb), self.spec)?)),
        }
    }
}
