use candle_core::Tensor;

use crate::error::Result;

/// Logistic function written through tanh, which has a backward pass.
pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(((x * 0.5)?.tanh()? + 1.0)?.affine(0.5, 0.0)?)
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    let pos = x.relu()?;
    let neg = (x - &pos)?;
    Ok((pos + (neg * slope)?)?)
}

/// Delays `x` by `steps` along `dim`, filling with zeros; the length is kept.
pub fn shift_time(x: &Tensor, dim: usize, steps: usize) -> Result<Tensor> {
    if steps == 0 {
        return Ok(x.clone());
    }
    let len = x.dim(dim)?;
    if steps >= len {
        return Ok(x.zeros_like()?);
    }
    Ok(x.narrow(dim, 0, len - steps)?
        .pad_with_zeros(dim, steps, 0)?)
}
