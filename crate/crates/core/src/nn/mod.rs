//! Differentiable building blocks over candle tensors.
//!
//! Spectral feature maps use the layout `[batch, time, channels, freq]`.
//! Folding time into the batch turns every time-causal 2-D convolution into a
//! 1-D convolution along frequency, with the time taps stacked as channels.

mod complex;
mod conv;
mod conv1d;
mod dense;
pub mod gradcheck;
mod lstm;
mod norm;
mod ops;
mod params;
mod stcm;
mod unet;

pub use complex::ComplexTensor;
pub use conv::{conv_freq, ComplexConv, ConvSpec, RealConv};
pub use conv1d::conv1d;
pub use dense::DenseBlock;
pub use lstm::{Linear, Lstm};
pub use norm::{FrameNorm, PRelu};
pub use ops::{leaky_relu, shift_time, sigmoid};
pub use params::ParamStore;
pub use stcm::{Stcm, StcmUnit, TemporalConv};
pub use unet::{Bottleneck, EncoderDecoder, UNetSpec};
