//! Two-stage speech signal improvement.
//!
//! Stage one repairs spectral damage (bandwidth loss, clipping, dropouts,
//! low level) with a gated complex U-Net; stage two removes noise and
//! reverberation with a sub-band/full-band cascade whose bottlenecks are
//! squeezed temporal convolution modules. The crate also contains the
//! distortion simulator used to produce training pairs, the training losses,
//! the two-stage training loop and objective evaluation.

pub mod audio;
pub mod degrade;
pub mod error;
pub mod eval;
pub mod losses;
pub mod models;
pub mod nn;
pub mod toy;
pub mod train;

pub use error::{Error, Result};

/// Element type of model parameters, re-exported for callers that build or
/// load networks.
pub use candle_core::DType;
