//! Central finite-difference gradient checks for float64 graphs.

use candle_core::{DType, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub eps: f64,
    /// Coordinates probed per variable; all of them when the variable is smaller.
    pub samples_per_var: usize,
    pub seed: u64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            samples_per_var: 24,
            seed: 0,
        }
    }
}

/// Outcome over all probed coordinates.
#[derive(Debug, Clone, Copy)]
pub struct GradReport {
    /// `||analytic - numeric|| / max(||analytic||, ||numeric||)`.
    pub rel_err: f64,
    pub probed: usize,
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?
        .flatten_all()?
        .sum_all()?
        .to_scalar::<f64>()?)
}

/// Compares the backward pass of `f` with central differences with respect
/// to each variable in `vars`. `f` must return a scalar (or is summed).
pub fn check<F>(vars: &[Var], f: F, cfg: GradCheck) -> Result<GradReport>
where
    F: Fn() -> Result<Tensor>,
{
    let loss = f()?;
    let grads = loss.backward()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut diff2, mut a2, mut n2, mut probed) = (0.0, 0.0, 0.0, 0);
    for var in vars {
        if var.dtype() != DType::F64 {
            return Err(Error::invalid("gradient checks need float64 variables"));
        }
        let analytic: Vec<f64> = match grads.get(var.as_tensor()) {
            Some(g) => g.flatten_all()?.to_vec1()?,
            None => vec![0.0; var.elem_count()],
        };
        let base: Vec<f64> = var.as_tensor().flatten_all()?.to_vec1()?;
        let n = base.len();
        let idx: Vec<usize> = if n <= cfg.samples_per_var {
            (0..n).collect()
        } else {
            (0..cfg.samples_per_var)
                .map(|_| rng.random_range(0..n))
                .collect()
        };
        let shape = var.shape().clone();
        for i in idx {
            let mut v = base.clone();
            v[i] = base[i] + cfg.eps;
            var.set(&Tensor::from_vec(v.clone(), shape.clone(), var.device())?)?;
            let up = scalar(&f()?)?;
            v[i] = base[i] - cfg.eps;
            var.set(&Tensor::from_vec(v, shape.clone(), var.device())?)?;
            let down = scalar(&f()?)?;
            let numeric = (up - down) / (2.0 * cfg.eps);
            diff2 += (analytic[i] - numeric).powi(2);
            a2 += analytic[i].powi(2);
            n2 += numeric.powi(2);
            probed += 1;
        }
        var.set(&Tensor::from_vec(base, shape, var.device())?)?;
    }
    let denom = a2.sqrt().max(n2.sqrt());
    let rel_err = if denom == 0.0 {
        0.0
    } else {
        diff2.sqrt() / denom
    };
    Ok(GradReport { rel_err, probed })
}
