use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{SimConfig, Stage};
use super::manifest::SourceBanks;
use super::pipeline::{simulate_stage1, simulate_stage2};
use super::recipe::DistortionRecipe;
use super::seed::{item_rng, mix_seed};
use crate::audio::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pair {
    pub input: Waveform,
    pub target: Waveform,
    pub recipe: DistortionRecipe,
    /// Index of the clean clip in the speech bank.
    pub source: usize,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub pairs: Vec<Pair>,
}

/// Dynamic-mixing batch source. An epoch is one pass over the clean speech
/// bank in a per-epoch shuffled order; each item gets a fresh recipe drawn
/// from a stream that depends only on (seed, epoch, position).
#[derive(Debug, Clone)]
pub struct DynamicBatches<'a> {
    banks: &'a SourceBanks,
    cfg: SimConfig,
    stage: Stage,
    batch_size: usize,
    segment_len: usize,
}

impl<'a> DynamicBatches<'a> {
    pub fn new(
        banks: &'a SourceBanks,
        cfg: SimConfig,
        stage: Stage,
        batch_size: usize,
        segment_len: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        if banks.speech.is_empty() {
            return Err(Error::invalid("no speech clips"));
        }
        if batch_size == 0 || segment_len == 0 {
            return Err(Error::invalid(
                "batch size and segment length must be positive",
            ));
        }
        if stage == Stage::Two && banks.noise.is_empty() {
            return Err(Error::invalid("stage two needs noise clips"));
        }
        Ok(Self {
            banks,
            cfg,
            stage,
            batch_size,
            segment_len,
        })
    }

    pub fn items_per_epoch(&self) -> usize {
        self.banks.speech.len()
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.items_per_epoch().div_ceil(self.batch_size)
    }

    pub fn order(&self, epoch: u64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.items_per_epoch()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[self.cfg.seed, epoch, u64::MAX]));
        idx.shuffle(&mut rng);
        idx
    }

    /// Item at `position` of `epoch`'s order. Independent of any other item,
    /// so workers may compute positions in any order.
    pub fn item(&self, epoch: u64, position: usize) -> Result<Pair> {
        let source = self.order(epoch)[position];
        self.item_for_source(epoch, position, source)
    }

    fn item_for_source(&self, epoch: u64, position: usize, source: usize) -> Result<Pair> {
        let mut rng = item_rng(self.cfg.seed, epoch, position as u64);
        let clip = &self.banks.speech[source];
        let start = if clip.len() > self.segment_len {
            rng.random_range(0..=clip.len() - self.segment_len)
        } else {
            0
        };
        let clean = clip.segment(start, self.segment_len);
        let sim = match self.stage {
            Stage::One => simulate_stage1(&clean, &self.cfg, &mut rng)?,
            Stage::Two => simulate_stage2(
                &clean,
                &self.cfg,
                &mut rng,
                &self.banks.noise,
                &self.banks.rir,
            )?,
        };
        Ok(Pair {
            input: sim.input,
            target: sim.target,
            recipe: sim.recipe,
            source,
        })
    }

    pub fn epoch(&self, epoch: u64) -> impl Iterator<Item = Result<Batch>> + '_ {
        let order = self.order(epoch);
        let n = order.len();
        (0..n).step_by(self.batch_size).map(move |start| {
            let end = (start + self.batch_size).min(n);
            let pairs = (start..end)
                .map(|p| self.item_for_source(epoch, p, order[p]))
                .collect::<Result<Vec<_>>>()?;
            Ok(Batch { pairs })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banks() -> SourceBanks {
        let mk = |len: usize, f: f64| {
            Waveform::new(
                (0..len)
                    .map(|n| 0.3 * (2.0 * std::f64::consts::PI * f * n as f64 / 48_000.0).sin())
                    .collect(),
                48_000,
            )
            .unwrap()
        };
        SourceBanks {
            speech: (0..5)
                .map(|i| mk(6_000 + 1000 * i, 200.0 + 50.0 * i as f64))
                .collect(),
            noise: vec![mk(2_000, 3_000.0)],
            rir: vec![Waveform::new(vec![1.0, 0.0, 0.3], 48_000).unwrap()],
        }
    }

    #[test]
    fn same_seed_same_batches() {
        let b = banks();
        for stage in [Stage::One, Stage::Two] {
            let a = DynamicBatches::new(&b, SimConfig::default(), stage, 2, 4_800).unwrap();
            let c = DynamicBatches::new(&b, SimConfig::default(), stage, 2, 4_800).unwrap();
            let x: Vec<_> = a.epoch(0).map(|r| r.unwrap()).collect();
            let y: Vec<_> = c.epoch(0).map(|r| r.unwrap()).collect();
            assert_eq!(x.len(), 3);
            for (p, q) in x
                .iter()
                .flat_map(|b| &b.pairs)
                .zip(y.iter().flat_map(|b| &b.pairs))
            {
                assert_eq!(p.input, q.input);
                assert_eq!(p.recipe, q.recipe);
                assert_eq!(p.input.len(), p.target.len());
                assert_eq!(p.input.sample_rate(), p.target.sample_rate());
            }
            let pos = a.item(0, 3).unwrap();
            assert_eq!(pos.input, x[1].pairs[1].input);
        }
    }

    #[test]
    fn epochs_differ() {
        let b = banks();
        let d = DynamicBatches::new(&b, SimConfig::default(), Stage::One, 5, 4_800).unwrap();
        let e0: Vec<_> = d.epoch(0).next().unwrap().unwrap().pairs;
        let e1: Vec<_> = d.epoch(1).next().unwrap().unwrap().pairs;
        let r0: Vec<_> = e0.iter().map(|p| &p.recipe).collect();
        let r1: Vec<_> = e1.iter().map(|p| &p.recipe).collect();
        assert_ne!(r0, r1);
    }
}
