use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::audio::wav::read_wav;
use crate::degrade::{
    replay, CorpusIndex, CorpusManifest, DistortionRecipe, SourceBanks, Stage1Distortion,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl Summary {
    fn of(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        Some(Self {
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            count: v.len(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct ReplayCheck {
    pub checked: usize,
    pub max_abs_err: f64,
    pub failures: Vec<String>,
    /// Why replay was not attempted, if it was not.
    pub skipped: Option<String>,
}

/// Statistics of a simulated corpus and a bit-level replay of its recipes.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub items: usize,
    pub stage: u8,
    pub category_counts: BTreeMap<String, usize>,
    pub category_fractions: BTreeMap<String, f64>,
    pub lowpass_rates: BTreeMap<u32, usize>,
    pub clip_eta: Option<Summary>,
    pub loudness_scale: Option<Summary>,
    /// Zeroed windows over all windows of discontinuity items.
    pub discontinuity_zero_fraction: Option<f64>,
    pub snr_db: Option<Summary>,
    pub reverb_fraction: Option<f64>,
    /// Stage-two items scaled down by the peak limiter.
    pub limited_items: usize,
    pub length_mismatches: usize,
    pub replay: ReplayCheck,
}

/// Replayed inputs must match the stored ones to float32 precision.
pub const REPLAY_TOLERANCE: f64 = 1e-5;

pub fn audit_corpus(dir: &Path) -> Result<AuditReport> {
    let index = CorpusIndex::load(dir)?;
    if index.items.is_empty() {
        return Err(Error::invalid("corpus holds no items"));
    }
    let mut recipes = Vec::with_capacity(index.items.len());
    for it in &index.items {
        let r: DistortionRecipe =
            serde_json::from_str(&std::fs::read_to_string(dir.join(&it.recipe))?)?;
        recipes.push(r);
    }
    let n = recipes.len();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut rates = BTreeMap::new();
    let (mut etas, mut scales, mut snrs) = (Vec::new(), Vec::new(), Vec::new());
    let (mut zeroed, mut windows, mut reverb, mut limited) = (0usize, 0usize, 0usize, 0usize);
    for r in &recipes {
        let key = serde_json::to_value(r.category())?
            .as_str()
            .unwrap_or_default()
            .to_string();
        *counts.entry(key).or_default() += 1;
        match &r.distortion {
            Stage1Distortion::Lowpass { rate } => *rates.entry(*rate).or_default() += 1,
            Stage1Distortion::Clip { eta } => etas.push(*eta),
            Stage1Distortion::Loudness { scale } => scales.push(*scale),
            Stage1Distortion::Discontinuity {
                zeroed_windows,
                total_windows,
                ..
            } => {
                zeroed += zeroed_windows;
                windows += total_windows;
            }
        }
        if let Some(nr) = &r.stage2 {
            snrs.push(nr.snr_db);
            reverb += usize::from(nr.rir_id.is_some());
            limited += usize::from(r.output_gain < 1.0);
        }
    }
    let fractions = counts
        .iter()
        .map(|(k, v)| (k.clone(), *v as f64 / n as f64))
        .collect();
    let stage = index.stage.number();

    let banks = if stage == 2 {
        match CorpusManifest::load(&index.manifest).and_then(|m| SourceBanks::load(&m)) {
            Ok(b) => Some(b),
            Err(e) => {
                log::warn!("replay skipped: {e}");
                None
            }
        }
    } else {
        Some(SourceBanks::default())
    };
    let mut check = ReplayCheck::default();
    let mut mismatches = 0;
    match &banks {
        None => check.skipped = Some(format!("cannot load {}", index.manifest.display())),
        Some(b) => {
            for (it, r) in index.items.iter().zip(&recipes) {
                let input = read_wav(dir.join(&it.input))?;
                let target = read_wav(dir.join(&it.target))?;
                if input.len() != target.len() {
                    mismatches += 1;
                    check.failures.push(it.id.clone());
                    continue;
                }
                let again = replay(&target, r, &b.noise, &b.rir, index.sim.mix_peak_limit)?;
                let err = again
                    .input
                    .samples()
                    .iter()
                    .zip(input.samples())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                check.max_abs_err = check.max_abs_err.max(err);
                if err > REPLAY_TOLERANCE {
                    check.failures.push(it.id.clone());
                }
                check.checked += 1;
            }
        }
    }
    let has2 = !snrs.is_empty();
    Ok(AuditReport {
        items: n,
        stage,
        category_counts: counts,
        category_fractions: fractions,
        lowpass_rates: rates,
        clip_eta: Summary::of(&etas),
        loudness_scale: Summary::of(&scales),
        discontinuity_zero_fraction: (windows > 0).then(|| zeroed as f64 / windows as f64),
        snr_db: Summary::of(&snrs),
        reverb_fraction: has2.then(|| reverb as f64 / n as f64),
        limited_items: limited,
        length_mismatches: mismatches,
        replay: check,
    })
}
