//! Network assemblies, the frozen two-stage cascade, checkpoints and
//! inference helpers.

mod cascade;
mod checkpoint;
mod config;
mod dccrn;
mod enhance;
mod model;
mod spectral;
mod subfull;

pub use cascade::Cascade;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use config::{Arch, ModelConfig, OutputMode};
pub use dccrn::Dccrn;
pub use enhance::{enhance, hardware_string, measure_rtf, Pipeline, RtfReport};
pub use model::{count_params, Model};
pub use spectral::{spectra_from_tensor, spectra_to_tensor, TensorIstft, MODEL_BINS};
pub use subfull::SubFullNet;
