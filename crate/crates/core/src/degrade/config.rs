use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Stage {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            _ => Err(Error::invalid(format!("stage must be 1 or 2, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }
}

/// Global probabilities and ranges of the distortion simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub p_coloration: f64,
    pub p_discontinuity: f64,
    pub p_loudness: f64,
    pub p_lowpass_within_coloration: f64,
    pub p_clip_within_coloration: f64,
    pub lowpass_rates: Vec<u32>,
    /// Clipping threshold range; each clip draws eta uniformly from it.
    pub clip_eta_range: (f64, f64),
    pub disc_window_ms: f64,
    pub disc_zero_prob: f64,
    pub loudness_scale_range: (f64, f64),
    pub stage2_snr_range: (f64, f64),
    pub stage2_reverb_prob: f64,
    /// Stage-two mixtures whose peak exceeds this are scaled down as a whole.
    pub mix_peak_limit: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            p_coloration: 0.60,
            p_discontinuity: 0.25,
            p_loudness: 0.15,
            p_lowpass_within_coloration: 0.60,
            p_clip_within_coloration: 0.40,
            lowpass_rates: vec![4_000, 8_000, 16_000, 24_000],
            clip_eta_range: (0.1, 0.9),
            disc_window_ms: 20.0,
            disc_zero_prob: 0.10,
            loudness_scale_range: (0.1, 0.5),
            stage2_snr_range: (0.0, 20.0),
            stage2_reverb_prob: 0.50,
            mix_peak_limit: 1.0,
            seed: 0,
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_coloration", self.p_coloration),
            ("p_discontinuity", self.p_discontinuity),
            ("p_loudness", self.p_loudness),
            (
                "p_lowpass_within_coloration",
                self.p_lowpass_within_coloration,
            ),
            ("p_clip_within_coloration", self.p_clip_within_coloration),
            ("disc_zero_prob", self.disc_zero_prob),
            ("stage2_reverb_prob", self.stage2_reverb_prob),
        ] {
            check_prob(name, p)?;
        }
        let cat = self.p_coloration + self.p_discontinuity + self.p_loudness;
        if (cat - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "category probabilities sum to {cat}, expected 1"
            )));
        }
        let col = self.p_lowpass_within_coloration + self.p_clip_within_coloration;
        if (col - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "coloration branch probabilities sum to {col}, expected 1"
            )));
        }
        let (lo, hi) = self.clip_eta_range;
        if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::invalid("clip eta range must lie inside (0, 1)"));
        }
        if self.lowpass_rates.is_empty() || self.lowpass_rates.contains(&0) {
            return Err(Error::invalid(
                "lowpass rates must be non-empty and positive",
            ));
        }
        let (lo, hi) = self.loudness_scale_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::invalid("loudness scale range must be positive"));
        }
        let (lo, hi) = self.stage2_snr_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid("invalid snr range"));
        }
        if self.disc_window_ms <= 0.0 {
            return Err(Error::invalid("discontinuity window must be positive"));
        }
        if self.mix_peak_limit <= 0.0 {
            return Err(Error::invalid("mix peak limit must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut c = SimConfig {
            p_loudness: 0.2,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.p_loudness = 0.15;
        c.clip_eta_range = (0.0, 0.5);
        assert!(c.validate().is_err());
        c.clip_eta_range = (0.2, 1.0);
        assert!(c.validate().is_err());
    }
}
