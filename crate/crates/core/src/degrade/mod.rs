//! Distortion simulation: stage-one repair targets (coloration, dropouts,
//! level), stage-two additions (reverberation and noise), corpus manifests and
//! the dynamic-mixing batch source.

mod config;
mod dataset;
mod export;
mod manifest;
mod ops;
mod pipeline;
mod recipe;
mod seed;

pub use config::{SimConfig, Stage};
pub use dataset::{Batch, DynamicBatches, Pair};
pub use export::{export_corpus, CorpusIndex, CorpusItem, CORPUS_FORMAT, CORPUS_INDEX};
pub use manifest::{load_audio, CorpusManifest, ManifestEntry, SourceBanks, SourceKind};
pub use ops::{
    apply_clipping, apply_discontinuity, apply_gain, apply_loudness, apply_lowpass_coloration,
    discontinuity_mask,
};
pub use pipeline::{
    apply_stage1, apply_stage2, replay, sample_stage1, sample_stage2, simulate_stage1,
    simulate_stage2, Simulated,
};
pub use recipe::{Category, DistortionRecipe, NoiseAndReverb, Stage1Distortion};
pub use seed::{item_rng, mix_seed};
