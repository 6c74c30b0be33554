use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Weights {
    pub si_snr: f64,
    pub plc: f64,
    pub adv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage2Weights {
    pub si_snr: f64,
    pub plc: f64,
    pub mag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub stage1: Stage1Weights,
    pub stage2: Stage2Weights,
    pub plc_exponent: f64,
    pub feature_matching: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            stage1: Stage1Weights {
                si_snr: 1.0,
                plc: 10.0,
                adv: 15.0,
            },
            stage2: Stage2Weights {
                si_snr: 1.0,
                plc: 1.0,
                mag: 1.0,
            },
            plc_exponent: 0.3,
            feature_matching: false,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [
            self.stage1.si_snr,
            self.stage1.plc,
            self.stage1.adv,
            self.stage2.si_snr,
            self.stage2.plc,
            self.stage2.mag,
        ];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("loss weights must be non-negative"));
        }
        if !(self.plc_exponent > 0.0 && self.plc_exponent <= 1.0) {
            return Err(Error::invalid("plc exponent must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Unweighted stage-one terms (scalar tensors).
#[derive(Debug, Clone)]
pub struct Stage1Parts {
    pub si_snr: Tensor,
    pub plc: Tensor,
    pub adv: Tensor,
}

#[derive(Debug, Clone)]
pub struct Stage2Parts {
    pub si_snr: Tensor,
    pub plc: Tensor,
    pub mag: Tensor,
}

pub fn stage1_composite(p: &Stage1Parts, w: &Stage1Weights) -> Result<Tensor> {
    Ok(
        ((p.si_snr.affine(w.si_snr, 0.0)? + p.plc.affine(w.plc, 0.0)?)?
            + p.adv.affine(w.adv, 0.0)?)?,
    )
}

pub fn stage2_composite(p: &Stage2Parts, w: &Stage2Weights) -> Result<Tensor> {
    Ok(
        ((p.si_snr.affine(w.si_snr, 0.0)? + p.plc.affine(w.plc, 0.0)?)?
            + p.mag.affine(w.mag, 0.0)?)?,
    )
}
