use candle_core::{DType, Device, Tensor};
use serde::Serialize;

use super::adam::Adam;
use super::config::OptimConfig;
use crate::audio::{stft, StftConfig, Waveform};
use crate::degrade::Pair;
use crate::error::{Error, Result};
use crate::losses::{
    feature_matching, lsgan_disc_loss, lsgan_gen_loss, mag_mse_loss, plc_loss, si_snr_loss_tensor,
    stage1_composite, stage2_composite, Discriminators, LossWeights, Stage1Parts, Stage2Parts,
};
use crate::models::{spectra_to_tensor, Cascade, Model, TensorIstft};
use crate::nn::ComplexTensor;

/// Equal-length pairs converted to the tensors a training step needs.
#[derive(Debug, Clone)]
pub struct PreparedBatch {
    pub input_spec: ComplexTensor,
    pub target_spec: ComplexTensor,
    /// `[B, L]` clean waveforms.
    pub target_wave: Tensor,
    pub inputs: Vec<Waveform>,
    pub targets: Vec<Waveform>,
    pub len: usize,
}

impl PreparedBatch {
    pub fn from_pairs(pairs: &[Pair], dtype: DType) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| Error::invalid("empty batch"))?;
        let len = first.target.len();
        if pairs
            .iter()
            .any(|p| p.input.len() != len || p.target.len() != len)
        {
            return Err(Error::Shape("batch items differ in length".into()));
        }
        let cfg = StftConfig::default();
        let ins = pairs
            .iter()
            .map(|p| stft(&p.input, &cfg))
            .collect::<Result<Vec<_>>>()?;
        let tgs = pairs
            .iter()
            .map(|p| stft(&p.target, &cfg))
            .collect::<Result<Vec<_>>>()?;
        let dev = Device::Cpu;
        let input_spec = spectra_to_tensor(&ins.iter().collect::<Vec<_>>(), dtype, &dev)?;
        let target_spec = spectra_to_tensor(&tgs.iter().collect::<Vec<_>>(), dtype, &dev)?;
        let flat: Vec<f64> = pairs
            .iter()
            .flat_map(|p| p.target.samples().iter().copied())
            .collect();
        let target_wave = Tensor::from_vec(flat, (pairs.len(), len), &dev)?.to_dtype(dtype)?;
        Ok(Self {
            input_spec,
            target_spec,
            target_wave,
            inputs: pairs.iter().map(|p| p.input.clone()).collect(),
            targets: pairs.iter().map(|p| p.target.clone()).collect(),
            len,
        })
    }

    pub fn size(&self) -> usize {
        self.targets.len()
    }
}

/// Scalar losses of one step. `adv` and `disc` are set in stage one, `mag`
/// in stage two.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StepLosses {
    pub total: f64,
    pub si_snr: f64,
    pub plc: f64,
    pub adv: Option<f64>,
    pub mag: Option<f64>,
    pub disc: Option<f64>,
    pub grad_norm: Option<f64>,
}

/// Output of a forward pass without parameter updates.
pub struct Evaluated {
    pub losses: StepLosses,
    /// Enhanced waveforms, one per batch item.
    pub estimates: Vec<Waveform>,
}

/// What the epoch loop needs from a stage.
pub trait Trainer {
    fn train_step(&mut self, batch: &PreparedBatch) -> Result<StepLosses>;
    fn evaluate(&self, batch: &PreparedBatch) -> Result<Evaluated>;
    fn set_lr(&mut self, lr: f64);
    fn stage(&self) -> u8;
    /// Networks to store, with their checkpoint names.
    fn models(&self) -> Vec<(&str, &Model)>;
    fn frozen(&self) -> bool {
        false
    }
}

fn scalar(t: &Tensor) -> Result<f64> {
    let v = t.to_dtype(DType::F64)?.to_scalar::<f64>()?;
    if !v.is_finite() {
        return Err(Error::Numerical(format!("loss is {v}")));
    }
    Ok(v)
}

fn waves(t: &Tensor, rate: u32) -> Result<Vec<Waveform>> {
    let rows: Vec<Vec<f64>> = t.to_dtype(DType::F64)?.to_vec2()?;
    rows.into_iter().map(|r| Waveform::new(r, rate)).collect()
}

fn make_adam(vars: Vec<candle_core::Var>, o: &OptimConfig) -> Result<Adam> {
    Adam::new(vars, o.lr, o.betas, o.eps, o.grad_clip)
}

/// Repair-network training: one discriminator update, then one generator
/// update on SI-SNR + PLC + adversarial terms.
pub struct Stage1Trainer {
    pub model: Model,
    pub disc: Discriminators,
    opt_g: Adam,
    opt_d: Adam,
    istft: TensorIstft,
    weights: LossWeights,
}

impl Stage1Trainer {
    pub fn new(
        model: Model,
        disc: Discriminators,
        optim: &OptimConfig,
        weights: LossWeights,
    ) -> Result<Self> {
        weights.validate()?;
        if disc.params().dtype() != model.dtype() {
            return Err(Error::invalid("discriminator and model dtypes differ"));
        }
        let opt_g = make_adam(model.params().vars(), optim)?;
        let opt_d = make_adam(disc.params().vars(), optim)?;
        let istft = TensorIstft::new(&StftConfig::default(), model.dtype(), &Device::Cpu)?;
        Ok(Self {
            model,
            disc,
            opt_g,
            opt_d,
            istft,
            weights,
        })
    }

    pub fn generator_optimizer(&self) -> &Adam {
        &self.opt_g
    }

    pub fn discriminator_optimizer(&self) -> &Adam {
        &self.opt_d
    }

    fn generator_losses(
        &self,
        b: &PreparedBatch,
        est_wave: &Tensor,
        est_spec: &ComplexTensor,
    ) -> Result<(Tensor, Stage1Parts)> {
        let d_fake = self.disc.forward(est_wave)?;
        let scores: Vec<Tensor> = d_fake.iter().map(|o| o.score.clone()).collect();
        let mut adv = lsgan_gen_loss(&scores)?;
        if self.weights.feature_matching {
            let d_real = self.disc.forward(&b.target_wave)?;
            adv = (adv + feature_matching(&d_real, &d_fake)?)?;
        }
        let parts = Stage1Parts {
            si_snr: si_snr_loss_tensor(est_wave, &b.target_wave)?,
            plc: plc_loss(est_spec, &b.target_spec, self.weights.plc_exponent)?,
            adv,
        };
        Ok((stage1_composite(&parts, &self.weights.stage1)?, parts))
    }
}

impl Trainer for Stage1Trainer {
    fn train_step(&mut self, b: &PreparedBatch) -> Result<StepLosses> {
        let est_spec = self.model.forward(&b.input_spec)?;
        let est_wave = self.istft.forward(&est_spec, b.len)?;

        let real = self.disc.forward(&b.target_wave)?;
        let fake = self.disc.forward(&est_wave.detach())?;
        let score =
            |o: &[crate::losses::DiscOutput]| o.iter().map(|x| x.score.clone()).collect::<Vec<_>>();
        let d_loss = lsgan_disc_loss(&score(&real), &score(&fake))?;
        let disc = scalar(&d_loss)?;
        self.opt_d.step(&d_loss.backward()?)?;

        let (total, parts) = self.generator_losses(b, &est_wave, &est_spec)?;
        let total_v = scalar(&total)?;
        let grads = total.backward()?;
        let norm = self.opt_g.step(&grads)?;
        Ok(StepLosses {
            total: total_v,
            si_snr: scalar(&parts.si_snr)?,
            plc: scalar(&parts.plc)?,
            adv: Some(scalar(&parts.adv)?),
            mag: None,
            disc: Some(disc),
            grad_norm: Some(norm),
        })
    }

    fn evaluate(&self, b: &PreparedBatch) -> Result<Evaluated> {
        let est_spec = self.model.forward(&b.input_spec)?.detach();
        let est_wave = self.istft.forward(&est_spec, b.len)?;
        let (total, parts) = self.generator_losses(b, &est_wave, &est_spec)?;
        Ok(Evaluated {
            losses: StepLosses {
                total: scalar(&total)?,
                si_snr: scalar(&parts.si_snr)?,
                plc: scalar(&parts.plc)?,
                adv: Some(scalar(&parts.adv)?),
                ..Default::default()
            },
            estimates: waves(&est_wave, b.targets[0].sample_rate())?,
        })
    }

    fn set_lr(&mut self, lr: f64) {
        self.opt_g.lr = lr;
        self.opt_d.lr = lr;
    }

    fn stage(&self) -> u8 {
        1
    }

    fn models(&self) -> Vec<(&str, &Model)> {
        vec![("stage1", &self.model)]
    }
}

/// Denoising-network training on the cascade: SI-SNR + PLC + magnitude MSE
/// of the final output. A frozen cascade gives the optimiser only the
/// stage-two parameters.
pub struct Stage2Trainer {
    pub cascade: Cascade,
    opt: Adam,
    istft: TensorIstft,
    weights: LossWeights,
}

impl Stage2Trainer {
    pub fn new(cascade: Cascade, optim: &OptimConfig, weights: LossWeights) -> Result<Self> {
        weights.validate()?;
        let mut vars = cascade.stage2.params().vars();
        if !cascade.frozen {
            vars.extend(cascade.stage1.params().vars());
        }
        let opt = make_adam(vars, optim)?;
        let istft = TensorIstft::new(&StftConfig::default(), cascade.stage2.dtype(), &Device::Cpu)?;
        Ok(Self {
            cascade,
            opt,
            istft,
            weights,
        })
    }

    pub fn optimizer(&self) -> &Adam {
        &self.opt
    }

    fn losses(&self, b: &PreparedBatch) -> Result<(Tensor, Stage2Parts, Tensor)> {
        let (_, est_spec) = self.cascade.forward(&b.input_spec)?;
        let est_wave = self.istft.forward(&est_spec, b.len)?;
        let parts = Stage2Parts {
            si_snr: si_snr_loss_tensor(&est_wave, &b.target_wave)?,
            plc: plc_loss(&est_spec, &b.target_spec, self.weights.plc_exponent)?,
            mag: mag_mse_loss(&est_spec, &b.target_spec)?,
        };
        Ok((
            stage2_composite(&parts, &self.weights.stage2)?,
            parts,
            est_wave,
        ))
    }

    fn report(total: f64, p: &Stage2Parts) -> Result<StepLosses> {
        Ok(StepLosses {
            total,
            si_snr: scalar(&p.si_snr)?,
            plc: scalar(&p.plc)?,
            mag: Some(scalar(&p.mag)?),
            ..Default::default()
        })
    }
}

impl Trainer for Stage2Trainer {
    fn train_step(&mut self, b: &PreparedBatch) -> Result<StepLosses> {
        let (total, parts, _) = self.losses(b)?;
        let total_v = scalar(&total)?;
        let norm = self.opt.step(&total.backward()?)?;
        let mut r = Self::report(total_v, &parts)?;
        r.grad_norm = Some(norm);
        Ok(r)
    }

    fn evaluate(&self, b: &PreparedBatch) -> Result<Evaluated> {
        let (total, parts, est) = self.losses(b)?;
        Ok(Evaluated {
            losses: Self::report(scalar(&total)?, &parts)?,
            estimates: waves(&est, b.targets[0].sample_rate())?,
        })
    }

    fn set_lr(&mut self, lr: f64) {
        self.opt.lr = lr;
    }

    fn stage(&self) -> u8 {
        2
    }

    fn models(&self) -> Vec<(&str, &Model)> {
        vec![
            ("stage1", &self.cascade.stage1),
            ("stage2", &self.cascade.stage2),
        ]
    }

    fn frozen(&self) -> bool {
        self.cascade.frozen
    }
}
