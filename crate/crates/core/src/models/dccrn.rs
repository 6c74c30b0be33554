use super::config::ModelConfig;
use super::spectral::MODEL_BINS;
use crate::error::Result;
use crate::nn::{ComplexTensor, EncoderDecoder, ParamStore, UNetSpec};

/// Complex U-Net with a recurrent bottleneck; gated complex convolutions when
/// the config asks for them.
#[derive(Debug, Clone)]
pub struct Dccrn {
    unet: EncoderDecoder,
}

impl Dccrn {
    pub fn new(ps: &mut ParamStore, cfg: &ModelConfig) -> Result<Self> {
        let spec = UNetSpec {
            in_ch: 2,
            channels: cfg.channels.clone(),
            out_ch: 2,
            kernel: cfg.kernel,
            stride_f: cfg.stride_f,
            gated: cfg.gated(),
        };
        Ok(Self {
            unet: EncoderDecoder::new(ps, "unet", &spec, MODEL_BINS, &cfg.bottleneck(false))?,
        })
    }

    /// `x: [B, T, 1, MODEL_BINS]` complex.
    pub fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        self.unet.forward(x)
    }
}
