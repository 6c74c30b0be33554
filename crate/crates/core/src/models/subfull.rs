use candle_core::Tensor;

use super::config::ModelConfig;
use super::spectral::MODEL_BINS;
use crate::error::Result;
use crate::nn::{
    ComplexConv, ComplexTensor, ConvSpec, DenseBlock, EncoderDecoder, FrameNorm, PRelu, ParamStore,
    UNetSpec,
};

#[derive(Debug, Clone)]
struct Level {
    conv: ComplexConv,
    post: Option<(FrameNorm, PRelu)>,
    out_bins: usize,
}

impl Level {
    fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let y = self.conv.forward(x)?.narrow_freq(0, self.out_bins)?;
        match &self.post {
            Some((n, a)) => y.map(|d| a.forward(&n.forward(d)?)),
            None => Ok(y),
        }
    }
}

/// Sub-band then full-band complex U-Nets between a complex feature encoder
/// (strided convolutions plus a DenseBlock) and the mirrored decoder.
///
/// The encoder output is cut into `sub_bands` equal frequency bands that are
/// stacked along channels for the sub-band U-Net, then unfolded again for the
/// full-band U-Net.
#[derive(Debug, Clone)]
pub struct SubFullNet {
    ced: Vec<Level>,
    ced_dense: DenseBlock,
    sub: EncoderDecoder,
    full: EncoderDecoder,
    cfd_dense: DenseBlock,
    cfd: Vec<Level>,
    bands: usize,
}

impl SubFullNet {
    pub fn new(ps: &mut ParamStore, cfg: &ModelConfig) -> Result<Self> {
        let c = cfg.ced_channels;
        let down = ConvSpec::new(cfg.kernel.0, cfg.kernel.1, 2);
        let mut ced = Vec::new();
        let mut bins = vec![MODEL_BINS];
        for i in 0..cfg.ced_downsamples {
            let f = down.out_bins(*bins.last().unwrap());
            ced.push(Level {
                conv: ComplexConv::new(
                    ps,
                    &format!("ced.{i}.conv"),
                    if i == 0 { 2 } else { c },
                    c,
                    down,
                    false,
                )?,
                post: Some((
                    FrameNorm::new(ps, &format!("ced.{i}.norm"), c)?,
                    PRelu::new(ps, &format!("ced.{i}.act"))?,
                )),
                out_bins: f,
            });
            bins.push(f);
        }
        let inner = *bins.last().unwrap();
        let ced_dense = DenseBlock::new(ps, "ced.dense", c, cfg.dense_depth, cfg.dense_kernel)?;
        let b = cfg.sub_bands;
        let unet = |in_ch: usize| UNetSpec {
            in_ch,
            channels: cfg.sub_channels.clone(),
            out_ch: in_ch,
            kernel: cfg.kernel,
            stride_f: cfg.stride_f,
            gated: false,
        };
        let sub = EncoderDecoder::new(ps, "sub", &unet(c * b), inner / b, &cfg.bottleneck(true))?;
        let full = EncoderDecoder::new(ps, "full", &unet(c), inner, &cfg.bottleneck(false))?;
        let cfd_dense = DenseBlock::new(ps, "cfd.dense", c, cfg.dense_depth, cfg.dense_kernel)?;
        let up = down.upsampling();
        let mut cfd = Vec::new();
        for i in 0..cfg.ced_downsamples {
            let last = i + 1 == cfg.ced_downsamples;
            let target = bins[cfg.ced_downsamples - 1 - i];
            cfd.push(Level {
                conv: ComplexConv::new(
                    ps,
                    &format!("cfd.{i}.conv"),
                    c,
                    if last { 2 } else { c },
                    up,
                    false,
                )?,
                post: if last {
                    None
                } else {
                    Some((
                        FrameNorm::new(ps, &format!("cfd.{i}.norm"), c)?,
                        PRelu::new(ps, &format!("cfd.{i}.act"))?,
                    ))
                },
                out_bins: target,
            });
        }
        Ok(Self {
            ced,
            ced_dense,
            sub,
            full,
            cfd_dense,
            cfd,
            bands: b,
        })
    }

    fn fold_bands(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let (b, t, c, f) = x.dims();
        let fold = |p: Tensor| -> Result<Tensor> {
            Ok(p.reshape((b, t, c * self.bands, f / self.bands))?)
        };
        ComplexTensor::from_parts(&fold(x.re()?)?, &fold(x.im()?)?)
    }

    fn unfold_bands(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let (b, t, cb, fb) = x.dims();
        let unfold = |p: Tensor| -> Result<Tensor> {
            Ok(p.reshape((b, t, cb / self.bands, fb * self.bands))?)
        };
        ComplexTensor::from_parts(&unfold(x.re()?)?, &unfold(x.im()?)?)
    }

    /// `x: [B, T, 1, MODEL_BINS]` complex.
    pub fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let mut h = x.clone();
        for l in &self.ced {
            h = l.forward(&h)?;
        }
        h = self.ced_dense.forward(&h)?;
        h = self.unfold_bands(&self.sub.forward(&self.fold_bands(&h)?)?)?;
        h = self.full.forward(&h)?;
        h = self.cfd_dense.forward(&h)?;
        for l in &self.cfd {
            h = l.forward(&h)?;
        }
        Ok(h)
    }
}
