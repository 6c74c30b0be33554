use std::path::{Path, PathBuf};

use candle_core::DType;
use serde::{Deserialize, Serialize};

use crate::degrade::{SimConfig, Stage};
use crate::error::{Error, Result};
use crate::losses::{DiscConfig, LossWeights};
use crate::models::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

/// Optimiser settings shared by both stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub lr: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    /// Global gradient-norm limit; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Validation epochs without improvement before the rate halves.
    pub patience: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            betas: (0.9, 0.999),
            eps: 1e-8,
            grad_clip: Some(5.0),
            patience: 2,
        }
    }
}

/// Training run description, read from JSON. Relative paths are resolved
/// against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub stage: u8,
    /// Corpus manifest for dynamic mixing.
    pub manifest: PathBuf,
    /// Separate manifest for validation; the training banks are reused
    /// with a different seed when absent.
    pub val_manifest: Option<PathBuf>,
    pub checkpoint_dir: PathBuf,
    pub epochs: usize,
    pub batch_size: usize,
    pub segment_seconds: f64,
    pub val_items: usize,
    pub val_seconds: f64,
    /// Stop after this many optimiser steps in total.
    pub max_steps: Option<usize>,
    pub seed: u64,
    pub precision: Precision,
    pub optim: OptimConfig,
    pub sim: SimConfig,
    /// Network trained in this stage. Defaults to GateDCCRN for stage one
    /// and S-DCCSN for stage two.
    pub model: Option<ModelConfig>,
    pub disc: DiscConfig,
    pub losses: LossWeights,
    /// Stage two only: keep the repair network fixed.
    pub freeze_stage1: bool,
    /// Stage two only: checkpoint holding the trained repair network.
    pub stage1_checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            stage: 1,
            manifest: PathBuf::from("manifest.jsonl"),
            val_manifest: None,
            checkpoint_dir: PathBuf::from("checkpoints"),
            epochs: 100,
            batch_size: 8,
            segment_seconds: 4.0,
            val_items: 32,
            val_seconds: 4.0,
            max_steps: None,
            seed: 0,
            precision: Precision::F32,
            optim: OptimConfig::default(),
            sim: SimConfig::default(),
            model: None,
            disc: DiscConfig::default(),
            losses: LossWeights::default(),
            freeze_stage1: true,
            stage1_checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: TrainConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        fix(&mut self.checkpoint_dir);
        if let Some(p) = self.val_manifest.as_mut() {
            fix(p);
        }
        if let Some(p) = self.stage1_checkpoint.as_mut() {
            fix(p);
        }
    }

    pub fn stage(&self) -> Result<Stage> {
        Stage::from_number(self.stage)
    }

    pub fn model_config(&self) -> ModelConfig {
        self.model.clone().unwrap_or_else(|| match self.stage {
            1 => ModelConfig::gate_dccrn(),
            _ => ModelConfig::sdccsn(),
        })
    }

    pub fn dtype(&self) -> DType {
        self.precision.dtype()
    }

    pub fn segment_len(&self) -> usize {
        (self.segment_seconds * crate::audio::FULLBAND_RATE as f64).round() as usize
    }

    pub fn val_len(&self) -> usize {
        (self.val_seconds * crate::audio::FULLBAND_RATE as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.stage()?;
        self.sim.validate()?;
        self.losses.validate()?;
        self.model_config().validate()?;
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid("epochs and batch_size must be positive"));
        }
        if !(self.segment_seconds > 0.0 && self.val_seconds > 0.0) {
            return Err(Error::invalid(
                "segment and validation lengths must be positive",
            ));
        }
        let o = &self.optim;
        if !(o.lr > 0.0 && o.lr.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&o.betas.0) || !(0.0..1.0).contains(&o.betas.1) {
            return Err(Error::invalid("Adam betas must be in [0, 1)"));
        }
        if o.grad_clip.is_some_and(|c| c <= 0.0) {
            return Err(Error::invalid("grad_clip must be positive"));
        }
        if self.stage == 2 && self.stage1_checkpoint.is_none() {
            return Err(Error::invalid("stage 2 needs stage1_checkpoint"));
        }
        Ok(())
    }
}
