use candle_core::Tensor;

use crate::error::{Error, Result};

/// Complex feature map stored as one real tensor `[B, T, 2C, F]`: the first
/// `C` channels are real parts, the last `C` imaginary parts.
#[derive(Debug, Clone)]
pub struct ComplexTensor {
    data: Tensor,
}

impl ComplexTensor {
    pub fn new(data: Tensor) -> Result<Self> {
        let (_, _, c, _) = data.dims4()?;
        if c % 2 != 0 {
            return Err(Error::Shape(format!(
                "complex tensor needs an even channel count, got {c}"
            )));
        }
        Ok(Self { data })
    }

    pub fn from_parts(re: &Tensor, im: &Tensor) -> Result<Self> {
        if re.dims() != im.dims() {
            return Err(Error::Shape(format!(
                "real part {:?} and imaginary part {:?} differ",
                re.dims(),
                im.dims()
            )));
        }
        Self::new(Tensor::cat(&[re, im], 2)?)
    }

    pub fn data(&self) -> &Tensor {
        &self.data
    }

    pub fn into_data(self) -> Tensor {
        self.data
    }

    /// Complex channel count.
    pub fn channels(&self) -> usize {
        self.data.dims()[2] / 2
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let d = self.data.dims();
        (d[0], d[1], d[2] / 2, d[3])
    }

    pub fn re(&self) -> Result<Tensor> {
        Ok(self.data.narrow(2, 0, self.channels())?)
    }

    pub fn im(&self) -> Result<Tensor> {
        let c = self.channels();
        Ok(self.data.narrow(2, c, c)?)
    }

    /// Channel concatenation that keeps the real/imaginary split.
    pub fn cat(parts: &[&ComplexTensor]) -> Result<Self> {
        let re = parts.iter().map(|p| p.re()).collect::<Result<Vec<_>>>()?;
        let im = parts.iter().map(|p| p.im()).collect::<Result<Vec<_>>>()?;
        Self::from_parts(&Tensor::cat(&re, 2)?, &Tensor::cat(&im, 2)?)
    }

    pub fn map(&self, f: impl FnOnce(&Tensor) -> Result<Tensor>) -> Result<Self> {
        Self::new(f(&self.data)?)
    }

    pub fn narrow_freq(&self, start: usize, len: usize) -> Result<Self> {
        Ok(Self {
            data: self.data.narrow(3, start, len)?,
        })
    }

    pub fn detach(&self) -> Self {
        Self {
            data: self.data.detach(),
        }
    }

    /// Element-wise complex product.
    pub fn mul(&self, other: &ComplexTensor) -> Result<Self> {
        let (a, b) = (self.re()?, self.im()?);
        let (c, d) = (other.re()?, other.im()?);
        let re = ((&a * &c)? - (&b * &d)?)?;
        let im = ((&a * &d)? + (&b * &c)?)?;
        Self::from_parts(&re, &im)
    }
}
