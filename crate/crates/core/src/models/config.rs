use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Bottleneck;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Dccrn,
    GateDccrn,
    SDccrn,
    SDccsn,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Dccrn => "DCCRN",
            Arch::GateDccrn => "GateDCCRN",
            Arch::SDccrn => "S-DCCRN",
            Arch::SDccsn => "S-DCCSN",
        }
    }

    pub fn is_subfull(self) -> bool {
        matches!(self, Arch::SDccrn | Arch::SDccsn)
    }
}

/// How the network output becomes the estimated spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    /// The output is the estimated spectrum.
    Direct,
    /// The output is an unbounded complex ratio mask multiplied with the input.
    ComplexMask,
}

/// Every architecture hyperparameter. Channel counts are real-plus-imaginary
/// totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub arch: Arch,
    pub output: OutputMode,
    /// U-Net channels of DCCRN and GateDCCRN.
    pub channels: Vec<usize>,
    pub kernel: (usize, usize),
    pub stride_f: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    /// Channels of the sub-band and full-band U-Nets.
    pub sub_channels: Vec<usize>,
    /// Width of the complex encoder/decoder (CED/CFD) around them.
    pub ced_channels: usize,
    /// Stride-2 frequency reductions in the CED.
    pub ced_downsamples: usize,
    pub dense_depth: usize,
    pub dense_kernel: (usize, usize),
    pub sub_bands: usize,
    pub stcm_hidden: usize,
    pub stcm_units_sub: usize,
    pub stcm_units_full: usize,
    pub stcm_kernel: usize,
    pub stcm_dilations: Vec<usize>,
    pub sub_lstm_hidden: usize,
    pub sub_lstm_layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::gate_dccrn()
    }
}

impl ModelConfig {
    pub fn dccrn() -> Self {
        Self {
            arch: Arch::Dccrn,
            output: OutputMode::Direct,
            channels: vec![16, 32, 64, 128, 256, 256],
            kernel: (5, 2),
            stride_f: 2,
            lstm_hidden: 256,
            lstm_layers: 2,
            sub_channels: vec![64, 64, 64, 64, 128, 128],
            ced_channels: 32,
            ced_downsamples: 3,
            dense_depth: 5,
            dense_kernel: (3, 2),
            sub_bands: 4,
            stcm_hidden: 64,
            stcm_units_sub: 27,
            stcm_units_full: 26,
            stcm_kernel: 3,
            stcm_dilations: vec![1, 2],
            sub_lstm_hidden: 256,
            sub_lstm_layers: 2,
        }
    }

    pub fn gate_dccrn() -> Self {
        Self {
            arch: Arch::GateDccrn,
            ..Self::dccrn()
        }
    }

    pub fn sdccrn() -> Self {
        Self {
            arch: Arch::SDccrn,
            output: OutputMode::ComplexMask,
            ..Self::dccrn()
        }
    }

    pub fn sdccsn() -> Self {
        Self {
            arch: Arch::SDccsn,
            output: OutputMode::ComplexMask,
            ..Self::dccrn()
        }
    }

    pub fn for_arch(arch: Arch) -> Self {
        match arch {
            Arch::Dccrn => Self::dccrn(),
            Arch::GateDccrn => Self::gate_dccrn(),
            Arch::SDccrn => Self::sdccrn(),
            Arch::SDccsn => Self::sdccsn(),
        }
    }

    pub fn gated(&self) -> bool {
        self.arch == Arch::GateDccrn
    }

    pub fn bottleneck(&self, sub_band: bool) -> Bottleneck {
        match self.arch {
            Arch::Dccrn | Arch::GateDccrn => Bottleneck::Lstm {
                hidden: self.lstm_hidden,
                layers: self.lstm_layers,
            },
            Arch::SDccrn => Bottleneck::Lstm {
                hidden: self.sub_lstm_hidden,
                layers: self.sub_lstm_layers,
            },
            Arch::SDccsn => Bottleneck::Stcm {
                hidden: self.stcm_hidden,
                units: if sub_band {
                    self.stcm_units_sub
                } else {
                    self.stcm_units_full
                },
                kernel: self.stcm_kernel,
                dilations: self.stcm_dilations.clone(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let even = |c: usize| c > 0 && c.is_multiple_of(2);
        if self.arch.is_subfull() {
            if self.sub_channels.is_empty() || !self.sub_channels.iter().all(|&c| even(c)) {
                return Err(Error::invalid("sub_channels must be positive and even"));
            }
            if !even(self.ced_channels) || self.dense_depth == 0 || self.ced_downsamples == 0 {
                return Err(Error::invalid("invalid CED/CFD settings"));
            }
            if self.sub_bands == 0 {
                return Err(Error::invalid("sub_bands must be positive"));
            }
            let bins = super::spectral::MODEL_BINS >> self.ced_downsamples;
            if bins == 0 || !bins.is_multiple_of(self.sub_bands) {
                return Err(Error::invalid(format!(
                    "{bins} CED bins cannot be split into {} bands",
                    self.sub_bands
                )));
            }
            if self.arch == Arch::SDccsn
                && (self.stcm_hidden == 0 || self.stcm_dilations.is_empty())
            {
                return Err(Error::invalid("STCM hidden size and dilations must be set"));
            }
        } else if self.channels.is_empty() || !self.channels.iter().all(|&c| even(c)) {
            return Err(Error::invalid("channels must be positive and even"));
        }
        if self.kernel.0 == 0 || self.kernel.1 == 0 || self.stride_f == 0 {
            return Err(Error::invalid("kernel and stride must be positive"));
        }
        Ok(())
    }
}
