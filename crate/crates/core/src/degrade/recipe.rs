use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Coloration,
    Discontinuity,
    Loudness,
}

/// The single stage-one distortion applied to a clip, with every sampled
/// parameter needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage1Distortion {
    /// Band limitation by resampling through `rate`.
    Lowpass {
        rate: u32,
    },
    Clip {
        eta: f64,
    },
    Discontinuity {
        window_ms: f64,
        zero_prob: f64,
        mask_seed: u64,
        /// Filled in when applied; informational.
        #[serde(default)]
        zeroed_windows: usize,
        #[serde(default)]
        total_windows: usize,
    },
    Loudness {
        scale: f64,
    },
}

impl Stage1Distortion {
    pub fn category(&self) -> Category {
        match self {
            Stage1Distortion::Lowpass { .. } | Stage1Distortion::Clip { .. } => {
                Category::Coloration
            }
            Stage1Distortion::Discontinuity { .. } => Category::Discontinuity,
            Stage1Distortion::Loudness { .. } => Category::Loudness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAndReverb {
    /// Index into the RIR bank when reverberation is applied.
    pub rir_id: Option<usize>,
    pub noise_id: usize,
    pub noise_offset: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecipe {
    pub stage: u8,
    pub distortion: Stage1Distortion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2: Option<NoiseAndReverb>,
    /// Gain applied to the final mixture by the peak limiter (1 when inactive).
    #[serde(default = "unit")]
    pub output_gain: f64,
}

fn unit() -> f64 {
    1.0
}

impl DistortionRecipe {
    pub fn category(&self) -> Category {
        self.distortion.category()
    }

    pub fn reverb(&self) -> bool {
        self.stage2.as_ref().is_some_and(|s| s.rir_id.is_some())
    }
}
