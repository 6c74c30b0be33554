use candle_core::Tensor;

use super::params::ParamStore;
use crate::error::Result;

const EPS: f64 = 1e-5;

/// Normalises each frame over channels and frequency, then applies a
/// per-channel affine map. Uses no batch statistics and looks at no other
/// frame, so it is causal and deterministic.
#[derive(Debug, Clone)]
pub struct FrameNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
}

impl FrameNorm {
    pub fn new(ps: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            gamma: ps.constant(&format!("{name}.weight"), &[channels], 1.0)?,
            beta: ps.constant(&format!("{name}.bias"), &[channels], 0.0)?,
        })
    }

    /// `x: [B, T, C, F]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let c = x.dims()[2];
        let mean = x.mean_keepdim((2, 3))?;
        let centred = x.broadcast_sub(&mean)?;
        let var = centred.sqr()?.mean_keepdim((2, 3))?;
        let y = centred.broadcast_div(&(var + EPS)?.sqrt()?)?;
        let g = self.gamma.reshape((1, 1, c, 1))?;
        let b = self.beta.reshape((1, 1, c, 1))?;
        Ok(y.broadcast_mul(&g)?.broadcast_add(&b)?)
    }

    /// `x: [B, T, C]`.
    pub fn forward_seq(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t, c) = x.dims3()?;
        Ok(self
            .forward(&x.reshape((b, t, c, 1))?)?
            .reshape((b, t, c))?)
    }
}

/// Parametric ReLU with a single shared slope.
#[derive(Debug, Clone)]
pub struct PRelu {
    pub slope: Tensor,
}

impl PRelu {
    pub fn new(ps: &mut ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            slope: ps.constant(&format!("{name}.weight"), &[1], 0.25)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let pos = x.relu()?;
        let neg = (x - &pos)?;
        Ok((pos + neg.broadcast_mul(&self.slope)?)?)
    }
}
