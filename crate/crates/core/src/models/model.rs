use candle_core::DType;

use super::config::{ModelConfig, OutputMode};
use super::dccrn::Dccrn;
use super::spectral::MODEL_BINS;
use super::subfull::SubFullNet;
use crate::error::{Error, Result};
use crate::nn::{ComplexTensor, ParamStore};

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
enum Net {
    Dccrn(Dccrn),
    SubFull(SubFullNet),
}

/// A network with its parameters. Consumes and produces full STFT spectra
/// `[B, T, 1, 513]`.
#[derive(Debug)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
    net: Net,
}

impl Model {
    pub fn new(config: ModelConfig, dtype: DType, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new(dtype, seed);
        let net = if config.arch.is_subfull() {
            Net::SubFull(SubFullNet::new(&mut params, &config)?)
        } else {
            Net::Dccrn(Dccrn::new(&mut params, &config)?)
        };
        Ok(Self {
            config,
            params,
            net,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.num_params()
    }

    pub fn dtype(&self) -> DType {
        self.params.dtype()
    }

    pub fn forward(&self, spec: &ComplexTensor) -> Result<ComplexTensor> {
        let (_, _, c, f) = spec.dims();
        if c != 1 || f != MODEL_BINS + 1 {
            return Err(Error::Shape(format!(
                "model expects [B, T, 1, {}] spectra, got {c} channels x {f} bins",
                MODEL_BINS + 1
            )));
        }
        let x = spec.narrow_freq(0, MODEL_BINS)?;
        let y = match &self.net {
            Net::Dccrn(n) => n.forward(&x)?,
            Net::SubFull(n) => n.forward(&x)?,
        };
        let y = y.map(|d| Ok(d.pad_with_zeros(3, 0, 1)?))?;
        match self.config.output {
            OutputMode::Direct => Ok(y),
            OutputMode::ComplexMask => y.mul(spec),
        }
    }
}

/// Total number of trainable scalars.
pub fn count_params(params: &ParamStore) -> usize {
    params.num_params()
}
