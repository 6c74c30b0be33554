use super::model::Model;
use crate::error::{Error, Result};
use crate::nn::ComplexTensor;

/// Repair network followed by the denoising network. When frozen, the
/// stage-one output is detached so no gradient reaches its parameters.
#[derive(Debug)]
pub struct Cascade {
    pub stage1: Model,
    pub stage2: Model,
    pub frozen: bool,
}

impl Cascade {
    pub fn new(stage1: Model, stage2: Model, frozen: bool) -> Result<Self> {
        if stage1.dtype() != stage2.dtype() {
            return Err(Error::invalid("cascade stages must share a dtype"));
        }
        Ok(Self {
            stage1,
            stage2,
            frozen,
        })
    }

    pub fn num_params(&self) -> usize {
        self.stage1.num_params() + self.stage2.num_params()
    }

    /// Returns the stage-one and final spectra.
    pub fn forward(&self, spec: &ComplexTensor) -> Result<(ComplexTensor, ComplexTensor)> {
        let s1 = self.stage1.forward(spec)?;
        let input = if self.frozen { s1.detach() } else { s1.clone() };
        let s2 = self.stage2.forward(&input)?;
        Ok((s1, s2))
    }
}
