//! Checkpoint container.
//!
//! A checkpoint is a safetensors file (little-endian tensor data, JSON
//! header). Tensors are named `<model>/<parameter>`. The header metadata
//! holds `format`, `stage` (`"1"` or `"2"`), `frozen` (`"true"`/`"false"`)
//! and `models`, a JSON array of `{"name", "config"}` objects with the full
//! [`ModelConfig`] of each stored network. Any further keys are carried
//! through untouched.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::safetensors::Load;
use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::Model;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "repairnet-checkpoint/1";

#[derive(Debug, Serialize, Deserialize)]
struct ModelEntry {
    name: String,
    config: ModelConfig,
}

#[derive(Debug)]
pub struct Checkpoint {
    pub stage: u8,
    pub frozen: bool,
    pub models: Vec<(String, Model)>,
    pub extra: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn take(&mut self, name: &str) -> Option<Model> {
        let i = self.models.iter().position(|(n, _)| n == name)?;
        Some(self.models.remove(i).1)
    }
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    stage: u8,
    frozen: bool,
    models: &[(&str, &Model)],
    extra: &BTreeMap<String, String>,
) -> Result<()> {
    let mut tensors: Vec<(String, Tensor)> = Vec::new();
    let mut entries = Vec::new();
    for (name, model) in models {
        if name.contains('/') {
            return Err(Error::invalid("model names may not contain '/'"));
        }
        for (p, var) in model.params().iter() {
            tensors.push((format!("{name}/{p}"), var.as_tensor().detach()));
        }
        entries.push(ModelEntry {
            name: name.to_string(),
            config: model.config().clone(),
        });
    }
    let mut meta: HashMap<String, String> = extra.clone().into_iter().collect();
    meta.insert("format".into(), CHECKPOINT_FORMAT.into());
    meta.insert("stage".into(), stage.to_string());
    meta.insert("frozen".into(), frozen.to_string());
    meta.insert("models".into(), serde_json::to_string(&entries)?);
    safetensors::serialize_to_file(tensors, Some(meta), path.as_ref())?;
    Ok(())
}

/// Loads every stored network into a fresh [`Model`] of `dtype`.
pub fn load_checkpoint(path: impl AsRef<Path>, dtype: DType) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    let st = safetensors::SafeTensors::deserialize(&bytes)?;
    let (_, header) = safetensors::SafeTensors::read_metadata(&bytes)?;
    let mut meta: BTreeMap<String, String> = header
        .metadata()
        .clone()
        .unwrap_or_default()
        .into_iter()
        .collect();
    match meta.remove("format") {
        Some(f) if f == CHECKPOINT_FORMAT => {}
        other => {
            return Err(Error::Checkpoint(format!(
                "{} is not a checkpoint of this tool (format {other:?})",
                path.display()
            )))
        }
    }
    let stage: u8 = meta
        .remove("stage")
        .and_then(|s| s.parse().ok())
        .filter(|s| *s == 1 || *s == 2)
        .ok_or_else(|| Error::Checkpoint("missing or invalid stage tag".into()))?;
    let frozen = meta.remove("frozen").is_some_and(|s| s == "true");
    let entries: Vec<ModelEntry> = serde_json::from_str(
        &meta
            .remove("models")
            .ok_or_else(|| Error::Checkpoint("missing model list".into()))?,
    )?;
    let mut by_model: BTreeMap<String, BTreeMap<String, Tensor>> = BTreeMap::new();
    for (name, view) in st.tensors() {
        let (model, param) = name
            .split_once('/')
            .ok_or_else(|| Error::Checkpoint(format!("unexpected tensor name {name}")))?;
        by_model
            .entry(model.to_string())
            .or_default()
            .insert(param.to_string(), view.load(&Device::Cpu)?);
    }
    let mut models = Vec::new();
    for e in entries {
        let model = Model::new(e.config, dtype, 0)?;
        let values = by_model.remove(&e.name).unwrap_or_default();
        model.params().load(&values)?;
        models.push((e.name, model));
    }
    Ok(Checkpoint {
        stage,
        frozen,
        models,
        extra: meta,
    })
}
