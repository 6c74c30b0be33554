use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::TrainConfig;
use super::schedule::LrSchedule;
use super::step::{PreparedBatch, Stage1Trainer, Stage2Trainer, Trainer};
use crate::audio::{stft, StftConfig};
use crate::degrade::{mix_seed, CorpusManifest, DynamicBatches, Pair, SourceBanks, Stage};
use crate::error::{Error, Result};
use crate::eval::lsd;
use crate::losses::{si_snr_db, Discriminators};
use crate::models::{load_checkpoint, save_checkpoint, Cascade, Checkpoint, Model};

/// Validation summary of one epoch.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValMetrics {
    pub loss: f64,
    pub si_snr_in: f64,
    pub si_snr_out: f64,
    pub si_snr_improvement: f64,
    pub lsd: f64,
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_si_snr_in: f64,
    pub val_si_snr_out: f64,
    pub val_si_snr_improvement: f64,
    pub val_lsd: f64,
    pub lr: f64,
    pub lr_halved: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub records: Vec<EpochRecord>,
    pub best_val: f64,
    pub best_checkpoint: PathBuf,
    pub last_checkpoint: PathBuf,
    pub steps: usize,
}

/// Composite loss, SI-SNR in/out and LSD over a fixed validation set.
pub fn validate<T: Trainer + ?Sized>(trainer: &T, batches: &[PreparedBatch]) -> Result<ValMetrics> {
    let cfg = StftConfig::default();
    let mut m = ValMetrics::default();
    let (mut items, mut loss_w) = (0usize, 0.0);
    for b in batches {
        let ev = trainer.evaluate(b)?;
        loss_w += ev.losses.total * b.size() as f64;
        for ((est, inp), tgt) in ev.estimates.iter().zip(&b.inputs).zip(&b.targets) {
            let sin = si_snr_db(inp.samples(), tgt.samples())?;
            let sout = si_snr_db(est.samples(), tgt.samples())?;
            m.si_snr_in += sin;
            m.si_snr_out += sout;
            m.lsd += lsd(&stft(est, &cfg)?, &stft(tgt, &cfg)?)?;
            items += 1;
        }
    }
    if items == 0 {
        return Err(Error::invalid("empty validation set"));
    }
    let n = items as f64;
    m.loss = loss_w / n;
    m.si_snr_in /= n;
    m.si_snr_out /= n;
    m.lsd /= n;
    m.si_snr_improvement = m.si_snr_out - m.si_snr_in;
    Ok(m)
}

fn save<T: Trainer + ?Sized>(
    trainer: &T,
    path: &Path,
    extra: BTreeMap<String, String>,
) -> Result<()> {
    save_checkpoint(
        path,
        trainer.stage(),
        trainer.frozen(),
        &trainer.models(),
        &extra,
    )
}

fn append_csv(path: &Path, rec: &EpochRecord) -> Result<()> {
    let fresh = !path.exists();
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    w.serialize(rec)?;
    w.flush()?;
    Ok(())
}

/// Epoch loop shared by both stages. Writes `metrics.csv`, `best.safetensors`
/// and `last.safetensors` under the checkpoint directory. A non-finite loss
/// or gradient stops the run after saving `nan_dump.safetensors` and the
/// offending batch's recipes.
pub fn run_epochs<T: Trainer + ?Sized>(
    trainer: &mut T,
    cfg: &TrainConfig,
    batches: &DynamicBatches,
    val: &[PreparedBatch],
) -> Result<TrainOutcome> {
    let dir = &cfg.checkpoint_dir;
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("metrics.csv");
    if csv_path.exists() {
        std::fs::remove_file(&csv_path)?;
    }
    let best_path = dir.join("best.safetensors");
    let last_path = dir.join("last.safetensors");
    let mut sched = LrSchedule::new(cfg.optim.lr, cfg.optim.patience);
    let mut records = Vec::new();
    let mut steps = 0usize;
    let mut best_val = f64::INFINITY;
    'epochs: for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let (mut loss_sum, mut n) = (0.0, 0usize);
        for batch in batches.epoch(epoch as u64) {
            let batch = batch?;
            let prepared = PreparedBatch::from_pairs(&batch.pairs, cfg.dtype())?;
            match trainer.train_step(&prepared) {
                Ok(l) => {
                    loss_sum += l.total;
                    n += 1;
                }
                Err(Error::Numerical(msg)) => {
                    let mut extra = BTreeMap::new();
                    extra.insert("reason".into(), msg.clone());
                    extra.insert("epoch".into(), epoch.to_string());
                    extra.insert("step".into(), steps.to_string());
                    save(trainer, &dir.join("nan_dump.safetensors"), extra)?;
                    let recipes: Vec<_> = batch.pairs.iter().map(|p| &p.recipe).collect();
                    std::fs::write(
                        dir.join("nan_batch.json"),
                        serde_json::to_string_pretty(&recipes)?,
                    )?;
                    return Err(Error::Numerical(format!(
                        "{msg} at epoch {epoch}, step {steps}; state saved to {}",
                        dir.display()
                    )));
                }
                Err(e) => return Err(e),
            }
            steps += 1;
            log::debug!("epoch {epoch} step {steps}");
            if cfg.max_steps.is_some_and(|m| steps >= m) {
                let rec =
                    finish_epoch(trainer, val, &mut sched, epoch, steps, loss_sum, n, started)?;
                best_val = checkpoint_epoch(trainer, &rec, best_val, &best_path, &last_path)?;
                append_csv(&csv_path, &rec)?;
                records.push(rec);
                break 'epochs;
            }
        }
        let rec = finish_epoch(trainer, val, &mut sched, epoch, steps, loss_sum, n, started)?;
        best_val = checkpoint_epoch(trainer, &rec, best_val, &best_path, &last_path)?;
        append_csv(&csv_path, &rec)?;
        records.push(rec);
    }
    Ok(TrainOutcome {
        records,
        best_val,
        best_checkpoint: best_path,
        last_checkpoint: last_path,
        steps,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_epoch<T: Trainer + ?Sized>(
    trainer: &mut T,
    val: &[PreparedBatch],
    sched: &mut LrSchedule,
    epoch: usize,
    steps: usize,
    loss_sum: f64,
    n: usize,
    started: Instant,
) -> Result<EpochRecord> {
    let v = validate(trainer, val)?;
    let halved = sched.step(v.loss);
    trainer.set_lr(sched.lr);
    Ok(EpochRecord {
        epoch,
        steps,
        train_loss: if n > 0 { loss_sum / n as f64 } else { f64::NAN },
        val_loss: v.loss,
        val_si_snr_in: v.si_snr_in,
        val_si_snr_out: v.si_snr_out,
        val_si_snr_improvement: v.si_snr_improvement,
        val_lsd: v.lsd,
        lr: sched.lr,
        lr_halved: halved,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn checkpoint_epoch<T: Trainer + ?Sized>(
    trainer: &T,
    rec: &EpochRecord,
    best: f64,
    best_path: &Path,
    last_path: &Path,
) -> Result<f64> {
    let mut extra = BTreeMap::new();
    extra.insert("epoch".into(), rec.epoch.to_string());
    extra.insert("val_loss".into(), rec.val_loss.to_string());
    save(trainer, last_path, extra.clone())?;
    if rec.val_loss < best {
        save(trainer, best_path, extra)?;
        return Ok(rec.val_loss);
    }
    Ok(best)
}

/// Fixed validation pairs: the first `n` items of epoch 0 of a batch source
/// with its own seed.
pub fn validation_set(
    banks: &SourceBanks,
    cfg: &TrainConfig,
    stage: Stage,
) -> Result<Vec<PreparedBatch>> {
    let mut sim = cfg.sim.clone();
    sim.seed = mix_seed(&[cfg.seed, 0x7661_6c00]);
    let src = DynamicBatches::new(banks, sim, stage, cfg.batch_size, cfg.val_len())?;
    let n = cfg.val_items.min(src.items_per_epoch()).max(1);
    let pairs: Vec<Pair> = (0..n).map(|p| src.item(0, p)).collect::<Result<_>>()?;
    pairs
        .chunks(cfg.batch_size)
        .map(|c| PreparedBatch::from_pairs(c, cfg.dtype()))
        .collect()
}

fn take_single(mut ckpt: Checkpoint, prefer: &str) -> Result<Model> {
    if let Some(m) = ckpt.take(prefer) {
        return Ok(m);
    }
    if ckpt.models.len() == 1 {
        return Ok(ckpt.models.remove(0).1);
    }
    Err(Error::Checkpoint(format!(
        "checkpoint has no `{prefer}` network"
    )))
}

/// Full training run from a config. `init` optionally warm-starts the
/// network trained in this stage.
pub fn train_from_config(cfg: &TrainConfig, init: Option<&Path>) -> Result<TrainOutcome> {
    cfg.validate()?;
    let stage = cfg.stage()?;
    let dtype = cfg.dtype();
    let manifest = CorpusManifest::load(&cfg.manifest)?;
    let banks = SourceBanks::load(&manifest)?;
    let val_banks = match &cfg.val_manifest {
        Some(p) => SourceBanks::load(&CorpusManifest::load(p)?)?,
        None => banks.clone(),
    };
    let mut sim = cfg.sim.clone();
    sim.seed = cfg.seed;
    let batches = DynamicBatches::new(&banks, sim, stage, cfg.batch_size, cfg.segment_len())?;
    let val = validation_set(&val_banks, cfg, stage)?;
    std::fs::create_dir_all(&cfg.checkpoint_dir)?;
    std::fs::write(
        cfg.checkpoint_dir.join("train_config.json"),
        serde_json::to_string_pretty(cfg)?,
    )?;
    let name = if stage == Stage::One {
        "stage1"
    } else {
        "stage2"
    };
    let model = match init {
        Some(p) => {
            let m = take_single(load_checkpoint(p, dtype)?, name)?;
            if m.config() != &cfg.model_config() {
                return Err(Error::invalid(
                    "init checkpoint architecture differs from config",
                ));
            }
            m
        }
        None => Model::new(cfg.model_config(), dtype, cfg.seed)?,
    };
    match stage {
        Stage::One => {
            let disc = Discriminators::new(cfg.disc.clone(), dtype, cfg.seed.wrapping_add(1))?;
            let mut t = Stage1Trainer::new(model, disc, &cfg.optim, cfg.losses)?;
            run_epochs(&mut t, cfg, &batches, &val)
        }
        Stage::Two => {
            let path = cfg
                .stage1_checkpoint
                .as_ref()
                .ok_or_else(|| Error::invalid("stage 2 needs stage1_checkpoint"))?;
            let s1 = take_single(load_checkpoint(path, dtype)?, "stage1")?;
            let cascade = Cascade::new(s1, model, cfg.freeze_stage1)?;
            let mut t = Stage2Trainer::new(cascade, &cfg.optim, cfg.losses)?;
            run_epochs(&mut t, cfg, &batches, &val)
        }
    }
}
