use serde::{Deserialize, Serialize};

use super::complex::ComplexTensor;
use super::conv::{ComplexConv, ConvSpec};
use super::lstm::{Linear, Lstm};
use super::norm::{FrameNorm, PRelu};
use super::params::ParamStore;
use super::stcm::Stcm;
use crate::error::{Error, Result};

/// Sequence model between encoder and decoder, applied to the encoder output
/// flattened to `[B, T, channels·bins]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bottleneck {
    /// LSTM followed by a fully connected projection back to the feature width.
    Lstm {
        hidden: usize,
        layers: usize,
    },
    Stcm {
        hidden: usize,
        units: usize,
        kernel: usize,
        dilations: Vec<usize>,
    },
    Identity,
}

#[derive(Debug, Clone)]
enum BottleneckNet {
    Lstm(Lstm, Linear),
    Stcm(Stcm),
    Identity,
}

/// Complex U-Net layout. Channel counts are real-plus-imaginary totals.
#[derive(Debug, Clone, PartialEq)]
pub struct UNetSpec {
    pub in_ch: usize,
    pub channels: Vec<usize>,
    pub out_ch: usize,
    pub kernel: (usize, usize),
    pub stride_f: usize,
    pub gated: bool,
}

#[derive(Debug, Clone)]
struct Stage {
    conv: ComplexConv,
    post: Option<(FrameNorm, PRelu)>,
}

impl Stage {
    fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let y = self.conv.forward(x)?;
        match &self.post {
            Some((n, a)) => y.map(|d| a.forward(&n.forward(d)?)),
            None => Ok(y),
        }
    }
}

/// Encoder of strided complex convolutions, a bottleneck, and a decoder whose
/// layer i consumes its predecessor's output concatenated with encoder skip
/// i. Decoder layers upsample frequency and crop to the mirrored encoder
/// input size, so the output has the input's bins and frames.
#[derive(Debug, Clone)]
pub struct EncoderDecoder {
    encoder: Vec<Stage>,
    decoder: Vec<Stage>,
    bottleneck: BottleneckNet,
    bins: usize,
    bins_per_level: Vec<usize>,
    latent: (usize, usize),
}

impl EncoderDecoder {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        spec: &UNetSpec,
        bins: usize,
        bottleneck: &Bottleneck,
    ) -> Result<Self> {
        if spec.channels.is_empty() {
            return Err(Error::Shape("U-Net needs at least one level".into()));
        }
        let down = ConvSpec::new(spec.kernel.0, spec.kernel.1, spec.stride_f);
        let mut encoder = Vec::new();
        let mut bins_per_level = Vec::new();
        let (mut prev, mut f) = (spec.in_ch, bins);
        for (i, &c) in spec.channels.iter().enumerate() {
            bins_per_level.push(f);
            encoder.push(Stage {
                conv: ComplexConv::new(
                    ps,
                    &format!("{name}.enc{i}.conv"),
                    prev,
                    c,
                    down,
                    spec.gated,
                )?,
                post: Some((
                    FrameNorm::new(ps, &format!("{name}.enc{i}.norm"), c)?,
                    PRelu::new(ps, &format!("{name}.enc{i}.act"))?,
                )),
            });
            prev = c;
            f = down.out_bins(f);
        }
        let latent = (prev, f);
        let width = prev * f;
        let bottleneck = match bottleneck {
            Bottleneck::Lstm { hidden, layers } => BottleneckNet::Lstm(
                Lstm::new(ps, &format!("{name}.lstm"), width, *hidden, *layers)?,
                Linear::new(ps, &format!("{name}.fc"), *hidden, width)?,
            ),
            Bottleneck::Stcm {
                hidden,
                units,
                kernel,
                dilations,
            } => BottleneckNet::Stcm(Stcm::new(
                ps,
                &format!("{name}.stcm"),
                width,
                *hidden,
                *units,
                *kernel,
                dilations,
            )?),
            Bottleneck::Identity => BottleneckNet::Identity,
        };
        let up = down.upsampling();
        let rev: Vec<usize> = spec.channels.iter().rev().copied().collect();
        let mut decoder = Vec::new();
        for (i, &c) in rev.iter().enumerate() {
            let last = i + 1 == rev.len();
            let out = if last { spec.out_ch } else { rev[i + 1] };
            decoder.push(Stage {
                conv: ComplexConv::new(
                    ps,
                    &format!("{name}.dec{i}.conv"),
                    2 * c,
                    out,
                    up,
                    spec.gated,
                )?,
                post: if last {
                    None
                } else {
                    Some((
                        FrameNorm::new(ps, &format!("{name}.dec{i}.norm"), out)?,
                        PRelu::new(ps, &format!("{name}.dec{i}.act"))?,
                    ))
                },
            });
        }
        Ok(Self {
            encoder,
            decoder,
            bottleneck,
            bins,
            bins_per_level,
            latent,
        })
    }

    /// Width of the flattened bottleneck features.
    pub fn latent_width(&self) -> usize {
        self.latent.0 * self.latent.1
    }

    pub fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let (_, _, _, f) = x.dims();
        if f != self.bins {
            return Err(Error::Shape(format!(
                "U-Net built for {} bins got {f}",
                self.bins
            )));
        }
        let mut skips = Vec::with_capacity(self.encoder.len());
        let mut h = x.clone();
        for s in &self.encoder {
            h = s.forward(&h)?;
            skips.push(h.clone());
        }
        h = self.apply_bottleneck(&h)?;
        for (i, s) in self.decoder.iter().enumerate() {
            let skip = &skips[skips.len() - 1 - i];
            let y = s.forward(&ComplexTensor::cat(&[&h, skip])?)?;
            let target = self.bins_per_level[self.bins_per_level.len() - 1 - i];
            h = y.narrow_freq(0, target)?;
        }
        Ok(h)
    }

    fn apply_bottleneck(&self, h: &ComplexTensor) -> Result<ComplexTensor> {
        let d = h.data();
        let (b, t, c, f) = d.dims4()?;
        let seq = d.reshape((b, t, c * f))?;
        let out = match &self.bottleneck {
            BottleneckNet::Identity => return Ok(h.clone()),
            BottleneckNet::Lstm(lstm, fc) => fc.forward(&lstm.forward(&seq)?)?,
            BottleneckNet::Stcm(stcm) => stcm.forward(&seq)?,
        };
        ComplexTensor::new(out.reshape((b, t, c, f))?)
    }
}
