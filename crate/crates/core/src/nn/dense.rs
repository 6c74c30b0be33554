use super::complex::ComplexTensor;
use super::conv::{ComplexConv, ConvSpec};
use super::norm::{FrameNorm, PRelu};
use super::params::ParamStore;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct DenseLayer {
    conv: ComplexConv,
    norm: FrameNorm,
    act: PRelu,
}

/// Densely connected complex convolutions: layer i sees the block input and
/// all earlier layer outputs concatenated; every layer emits `channels`
/// (real plus imaginary) channels, and the last layer's output is the block's.
#[derive(Debug, Clone)]
pub struct DenseBlock {
    layers: Vec<DenseLayer>,
}

impl DenseBlock {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        channels: usize,
        depth: usize,
        kernel: (usize, usize),
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Shape("dense block depth must be positive".into()));
        }
        let spec = ConvSpec::new(kernel.0, kernel.1, 1);
        let layers = (0..depth)
            .map(|i| {
                Ok(DenseLayer {
                    conv: ComplexConv::new(
                        ps,
                        &format!("{name}.{i}.conv"),
                        channels * (i + 1),
                        channels,
                        spec,
                        false,
                    )?,
                    norm: FrameNorm::new(ps, &format!("{name}.{i}.norm"), channels)?,
                    act: PRelu::new(ps, &format!("{name}.{i}.act"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    /// Closed-form parameter count for a block built by [`DenseBlock::new`].
    pub fn expected_params(channels: usize, depth: usize, kernel: (usize, usize)) -> usize {
        (0..depth)
            .map(|i| {
                channels * (i + 1) * channels * kernel.0 * kernel.1 / 2
                    + channels
                    + 2 * channels
                    + 1
            })
            .sum()
    }

    pub fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let mut feats = vec![x.clone()];
        let mut out = x.clone();
        for l in &self.layers {
            let refs: Vec<&ComplexTensor> = feats.iter().collect();
            let input = if refs.len() == 1 {
                x.clone()
            } else {
                ComplexTensor::cat(&refs)?
            };
            let y = l.conv.forward(&input)?;
            out = y.map(|d| l.act.forward(&l.norm.forward(d)?))?;
            feats.push(out.clone());
        }
        Ok(out)
    }
}
