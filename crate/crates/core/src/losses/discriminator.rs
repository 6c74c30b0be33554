use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{conv1d, leaky_relu, ParamStore};

const SLOPE: f64 = 0.1;

/// One 1-D convolution of a discriminator stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscLayer {
    pub out: usize,
    pub kernel: usize,
    pub stride: usize,
    #[serde(default = "one")]
    pub groups: usize,
}

fn one() -> usize {
    1
}

impl DiscLayer {
    const fn new(out: usize, kernel: usize, stride: usize, groups: usize) -> Self {
        Self {
            out,
            kernel,
            stride,
            groups,
        }
    }
}

/// Multi-period and multi-scale discriminator layout. The default is the
/// usual vocoder layout with every width divided by four.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscConfig {
    pub periods: Vec<usize>,
    pub mpd_layers: Vec<DiscLayer>,
    pub scales: usize,
    pub msd_layers: Vec<DiscLayer>,
    /// Kernel of the final one-channel convolution.
    pub post_kernel: usize,
}

impl Default for DiscConfig {
    fn default() -> Self {
        Self {
            periods: vec![2, 3, 5, 7, 11],
            mpd_layers: vec![
                DiscLayer::new(8, 5, 3, 1),
                DiscLayer::new(32, 5, 3, 1),
                DiscLayer::new(128, 5, 3, 1),
                DiscLayer::new(256, 5, 3, 1),
                DiscLayer::new(256, 5, 1, 1),
            ],
            scales: 3,
            msd_layers: vec![
                DiscLayer::new(32, 15, 1, 1),
                DiscLayer::new(32, 41, 2, 4),
                DiscLayer::new(64, 41, 2, 16),
                DiscLayer::new(128, 41, 4, 16),
                DiscLayer::new(256, 41, 4, 16),
                DiscLayer::new(256, 41, 1, 16),
                DiscLayer::new(256, 5, 1, 1),
            ],
            post_kernel: 3,
        }
    }
}

#[derive(Debug, Clone)]
struct Conv1d {
    weight: Tensor,
    bias: Tensor,
    stride: usize,
    groups: usize,
}

impl Conv1d {
    fn new(ps: &mut ParamStore, name: &str, cin: usize, l: DiscLayer) -> Result<Self> {
        if l.groups == 0
            || !cin.is_multiple_of(l.groups)
            || !l.out.is_multiple_of(l.groups)
            || l.kernel == 0
        {
            return Err(Error::invalid(format!(
                "discriminator layer {name}: {cin} -> {} channels with {} groups",
                l.out, l.groups
            )));
        }
        let fan_in = cin / l.groups * l.kernel;
        let bound = 1.0 / (fan_in as f64).sqrt();
        Ok(Self {
            weight: ps.uniform(
                &format!("{name}.weight"),
                &[l.out, cin / l.groups, l.kernel],
                bound,
            )?,
            bias: ps.uniform(&format!("{name}.bias"), &[l.out], bound)?,
            stride: l.stride.max(1),
            groups: l.groups,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let k = self.weight.dims()[2];
        let y = conv1d(x, &self.weight, (k / 2, k / 2), self.stride, self.groups)?;
        Ok(y.broadcast_add(&self.bias.reshape((1, (), 1))?)?)
    }
}

#[derive(Debug, Clone)]
struct Stack {
    layers: Vec<Conv1d>,
    post: Conv1d,
}

impl Stack {
    fn new(
        ps: &mut ParamStore,
        name: &str,
        layers: &[DiscLayer],
        post_kernel: usize,
    ) -> Result<Self> {
        let mut cin = 1;
        let mut convs = Vec::new();
        for (i, l) in layers.iter().enumerate() {
            convs.push(Conv1d::new(ps, &format!("{name}.{i}"), cin, *l)?);
            cin = l.out;
        }
        let post = Conv1d::new(
            ps,
            &format!("{name}.post"),
            cin,
            DiscLayer::new(1, post_kernel, 1, 1),
        )?;
        Ok(Self {
            layers: convs,
            post,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let mut h = x.clone();
        let mut feats = Vec::with_capacity(self.layers.len() + 1);
        for l in &self.layers {
            h = leaky_relu(&l.forward(&h)?, SLOPE)?;
            feats.push(h.clone());
        }
        let score = self.post.forward(&h)?;
        feats.push(score.clone());
        Ok((score, feats))
    }
}

/// Score map and intermediate activations of one sub-discriminator.
#[derive(Debug, Clone)]
pub struct DiscOutput {
    /// `[B, n]` scores.
    pub score: Tensor,
    pub features: Vec<Tensor>,
}

/// Period-`p` view of `[B, L]` waveforms as `[B, p, ceil(L/p)]`, zero-padded
/// on the right: element `[b, j, i]` is sample `i·p + j`.
pub fn period_view(x: &Tensor, p: usize) -> Result<Tensor> {
    let (b, l) = x.dims2()?;
    let n = l.div_ceil(p);
    let padded = x.pad_with_zeros(1, 0, n * p - l)?;
    Ok(padded.reshape((b, n, p))?.transpose(1, 2)?.contiguous()?)
}

fn halve(x: &Tensor) -> Result<Tensor> {
    let (b, c, l) = x.dims3()?;
    let x = if l % 2 == 1 {
        x.pad_with_zeros(2, 0, 1)?
    } else {
        x.clone()
    };
    let n = x.dims()[2] / 2;
    Ok(x.reshape((b, c, n, 2))?.mean(3)?)
}

/// Multi-period discriminators (waveform folded by period, convolutions along
/// the folded time axis with the phase in the batch) followed by multi-scale
/// discriminators on progressively 2x average-pooled waveforms.
#[derive(Debug)]
pub struct Discriminators {
    config: DiscConfig,
    params: ParamStore,
    mpd: Vec<Stack>,
    msd: Vec<Stack>,
}

impl Discriminators {
    pub fn new(config: DiscConfig, dtype: DType, seed: u64) -> Result<Self> {
        if config.periods.contains(&0) {
            return Err(Error::invalid("periods must be positive"));
        }
        let mut params = ParamStore::new(dtype, seed);
        let mpd = config
            .periods
            .iter()
            .map(|p| {
                Stack::new(
                    &mut params,
                    &format!("mpd.p{p}"),
                    &config.mpd_layers,
                    config.post_kernel,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let msd = (0..config.scales)
            .map(|s| {
                Stack::new(
                    &mut params,
                    &format!("msd.s{s}"),
                    &config.msd_layers,
                    config.post_kernel,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            params,
            mpd,
            msd,
        })
    }

    pub fn config(&self) -> &DiscConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn mpd_forward(&self, wave: &Tensor) -> Result<Vec<DiscOutput>> {
        let (b, _) = wave.dims2()?;
        self.config
            .periods
            .iter()
            .zip(&self.mpd)
            .map(|(&p, stack)| {
                let v = period_view(wave, p)?;
                let n = v.dims()[2];
                let (score, feats) = stack.forward(&v.reshape((b * p, 1, n))?)?;
                let score = score.reshape((b, ()))?;
                Ok(DiscOutput {
                    score,
                    features: feats,
                })
            })
            .collect()
    }

    pub fn msd_forward(&self, wave: &Tensor) -> Result<Vec<DiscOutput>> {
        let (b, l) = wave.dims2()?;
        let mut x = wave.reshape((b, 1, l))?;
        let mut outs = Vec::with_capacity(self.msd.len());
        for (i, stack) in self.msd.iter().enumerate() {
            if i > 0 {
                x = halve(&x)?;
            }
            let (score, feats) = stack.forward(&x)?;
            outs.push(DiscOutput {
                score: score.reshape((b, ()))?,
                features: feats,
            });
        }
        Ok(outs)
    }

    /// All sub-discriminators on `[B, L]` waveforms.
    pub fn forward(&self, wave: &Tensor) -> Result<Vec<DiscOutput>> {
        let mut out = self.mpd_forward(wave)?;
        out.extend(self.msd_forward(wave)?);
        Ok(out)
    }
}
