use candle_core::Tensor;

use super::lstm::Linear;
use super::norm::{FrameNorm, PRelu};
use super::params::ParamStore;
use crate::error::{Error, Result};

/// Dilated causal convolution over time for sequences `[B, T, C]`. The
/// sequence is left-padded by repeating its first frame, so a time-constant
/// input yields a time-constant output.
#[derive(Debug, Clone)]
pub struct TemporalConv {
    pub weight: Tensor,
    pub bias: Tensor,
    pub dilation: usize,
}

impl TemporalConv {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        channels: usize,
        kernel: usize,
        dilation: usize,
    ) -> Result<Self> {
        if kernel == 0 || dilation == 0 {
            return Err(Error::Shape(
                "temporal conv needs kernel and dilation".into(),
            ));
        }
        let bound = 1.0 / ((channels * kernel) as f64).sqrt();
        Ok(Self {
            weight: ps.uniform(
                &format!("{name}.weight"),
                &[channels, channels, kernel],
                bound,
            )?,
            bias: ps.uniform(&format!("{name}.bias"), &[channels], bound)?,
            dilation,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t, c) = x.dims3()?;
        let (co, _, k) = self.weight.dims3()?;
        let pad = (k - 1) * self.dilation;
        let xp = x.pad_with_same(1, pad, 0)?;
        let taps = (0..k)
            .map(|j| xp.narrow(1, j * self.dilation, t))
            .collect::<candle_core::Result<Vec<_>>>()?;
        let stacked = Tensor::cat(&taps, 2)?.reshape((b * t, k * c))?;
        let w = self.weight.permute((0, 2, 1))?.reshape((co, k * c))?;
        let y = stacked.matmul(&w.t()?)?.broadcast_add(&self.bias)?;
        Ok(y.reshape((b, t, co))?)
    }
}

#[derive(Debug, Clone)]
struct ConvStage {
    conv: TemporalConv,
    norm: FrameNorm,
    act: PRelu,
}

/// Squeeze to `hidden` channels, dilated temporal convolutions with norm and
/// PReLU, unsqueeze back, residual add.
#[derive(Debug, Clone)]
pub struct StcmUnit {
    squeeze: Linear,
    squeeze_norm: FrameNorm,
    squeeze_act: PRelu,
    stages: Vec<ConvStage>,
    unsqueeze: Linear,
}

impl StcmUnit {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        width: usize,
        hidden: usize,
        kernel: usize,
        dilations: &[usize],
    ) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Shape("STCM hidden size must be positive".into()));
        }
        let stages = dilations
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                Ok(ConvStage {
                    conv: TemporalConv::new(ps, &format!("{name}.tconv{i}"), hidden, kernel, d)?,
                    norm: FrameNorm::new(ps, &format!("{name}.tnorm{i}"), hidden)?,
                    act: PRelu::new(ps, &format!("{name}.tact{i}"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            squeeze: Linear::new(ps, &format!("{name}.squeeze"), width, hidden)?,
            squeeze_norm: FrameNorm::new(ps, &format!("{name}.snorm"), hidden)?,
            squeeze_act: PRelu::new(ps, &format!("{name}.sact"))?,
            stages,
            unsqueeze: Linear::new(ps, &format!("{name}.unsqueeze"), hidden, width)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = self.squeeze.forward(x)?;
        h = self
            .squeeze_act
            .forward(&self.squeeze_norm.forward_seq(&h)?)?;
        for s in &self.stages {
            h = s.act.forward(&s.norm.forward_seq(&s.conv.forward(&h)?)?)?;
        }
        Ok((x + self.unsqueeze.forward(&h)?)?)
    }
}

/// Stack of [`StcmUnit`]s over `[B, T, D]`.
#[derive(Debug, Clone)]
pub struct Stcm {
    units: Vec<StcmUnit>,
}

impl Stcm {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        width: usize,
        hidden: usize,
        units: usize,
        kernel: usize,
        dilations: &[usize],
    ) -> Result<Self> {
        let units = (0..units)
            .map(|i| StcmUnit::new(ps, &format!("{name}.{i}"), width, hidden, kernel, dilations))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { units })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut x = x.clone();
        for u in &self.units {
            x = u.forward(&x)?;
        }
        Ok(x)
    }
}
