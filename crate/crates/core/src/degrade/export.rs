use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{SimConfig, Stage};
use super::dataset::DynamicBatches;
use super::manifest::{CorpusManifest, SourceBanks};
use crate::audio::wav::{write_wav, WavEncoding};
use crate::error::{Error, Result};

pub const CORPUS_FORMAT: &str = "repairnet-corpus/1";
pub const CORPUS_INDEX: &str = "corpus.json";

/// One exported pair. Paths are relative to the corpus directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub id: String,
    pub input: PathBuf,
    pub target: PathBuf,
    pub recipe: PathBuf,
    /// Index of the clean clip in the speech bank of `manifest`.
    pub source: usize,
    pub duration_s: f64,
}

/// `corpus.json`: how a simulated corpus was produced and what it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub format: String,
    pub stage: Stage,
    pub seed: u64,
    pub segment_seconds: f64,
    /// Manifest the sources came from; replays need its noise and RIR banks.
    pub manifest: PathBuf,
    pub sim: SimConfig,
    pub items: Vec<CorpusItem>,
}

impl CorpusIndex {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(CORPUS_INDEX);
        if !path.is_file() {
            return Err(Error::invalid(format!("{} not found", path.display())));
        }
        let idx: CorpusIndex = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        if idx.format != CORPUS_FORMAT {
            return Err(Error::invalid(format!(
                "unknown corpus format {}",
                idx.format
            )));
        }
        Ok(idx)
    }
}

/// Simulates `count` pairs from the sources in `manifest_path` and writes
/// them under `out`: `input/<id>.wav`, `target/<id>.wav`, a recipe sidecar
/// `recipes/<id>.json` and the index `corpus.json`. WAVs are 32-bit float so
/// the recipes replay exactly.
pub fn export_corpus(
    manifest_path: &Path,
    stage: Stage,
    count: usize,
    mut sim: SimConfig,
    seed: u64,
    segment_seconds: f64,
    out: &Path,
) -> Result<CorpusIndex> {
    if count == 0 {
        return Err(Error::invalid("count must be positive"));
    }
    if segment_seconds.is_nan() || segment_seconds <= 0.0 {
        return Err(Error::invalid("segment length must be positive"));
    }
    let manifest = CorpusManifest::load(manifest_path)?;
    let banks = SourceBanks::load(&manifest)?;
    sim.seed = seed;
    let seg = (segment_seconds * crate::audio::FULLBAND_RATE as f64).round() as usize;
    let src = DynamicBatches::new(&banks, sim.clone(), stage, 1, seg)?;
    for sub in ["input", "target", "recipes"] {
        std::fs::create_dir_all(out.join(sub))?;
    }
    let per_epoch = src.items_per_epoch();
    let mut items = Vec::with_capacity(count);
    for i in 0..count {
        let pair = src.item((i / per_epoch) as u64, i % per_epoch)?;
        let id = format!("{i:06}");
        let item = CorpusItem {
            input: PathBuf::from(format!("input/{id}.wav")),
            target: PathBuf::from(format!("target/{id}.wav")),
            recipe: PathBuf::from(format!("recipes/{id}.json")),
            source: pair.source,
            duration_s: pair.input.duration_seconds(),
            id,
        };
        write_wav(out.join(&item.input), &pair.input, WavEncoding::Float32)?;
        write_wav(out.join(&item.target), &pair.target, WavEncoding::Float32)?;
        std::fs::write(
            out.join(&item.recipe),
            serde_json::to_string_pretty(&pair.recipe)?,
        )?;
        items.push(item);
    }
    let index = CorpusIndex {
        format: CORPUS_FORMAT.into(),
        stage,
        seed,
        segment_seconds,
        manifest: std::fs::canonicalize(manifest_path)?,
        sim,
        items,
    };
    std::fs::write(
        out.join(CORPUS_INDEX),
        serde_json::to_string_pretty(&index)?,
    )?;
    Ok(index)
}
