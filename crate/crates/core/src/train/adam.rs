use candle_core::backprop::GradStore;
use candle_core::{Tensor, Var};

use crate::error::{Error, Result};

/// Adam over an explicit variable list, with optional global-norm gradient
/// clipping. Moments exist only for the listed variables.
pub struct Adam {
    vars: Vec<Var>,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip: Option<f64>,
}

impl Adam {
    pub fn new(
        vars: Vec<Var>,
        lr: f64,
        betas: (f64, f64),
        eps: f64,
        clip: Option<f64>,
    ) -> Result<Self> {
        let m = vars
            .iter()
            .map(|v| Ok(v.as_tensor().zeros_like()?))
            .collect::<Result<Vec<_>>>()?;
        let v = m.clone();
        Ok(Self {
            vars,
            m,
            v,
            step: 0,
            lr,
            beta1: betas.0,
            beta2: betas.1,
            eps,
            clip,
        })
    }

    pub fn num_tracked(&self) -> usize {
        self.vars.len()
    }

    /// Scalars held in first and second moments together.
    pub fn moment_elements(&self) -> usize {
        self.m.iter().chain(&self.v).map(|t| t.elem_count()).sum()
    }

    /// Whether `var` is updated by this optimizer.
    pub fn tracks(&self, var: &Var) -> bool {
        self.vars
            .iter()
            .any(|v| v.as_tensor().id() == var.as_tensor().id())
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    /// Applies one update and returns the pre-clipping gradient norm.
    pub fn step(&mut self, grads: &GradStore) -> Result<f64> {
        let gs: Vec<Option<Tensor>> = self
            .vars
            .iter()
            .map(|v| grads.get(v.as_tensor()).cloned())
            .collect();
        let mut sq = 0.0;
        for g in gs.iter().flatten() {
            sq += g
                .to_dtype(candle_core::DType::F64)?
                .sqr()?
                .sum_all()?
                .to_scalar::<f64>()?;
        }
        let norm = sq.sqrt();
        if !norm.is_finite() {
            return Err(Error::Numerical(format!("gradient norm is {norm}")));
        }
        let scale = match self.clip {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, g) in gs.into_iter().enumerate() {
            let Some(g) = g else { continue };
            let g = (g.detach() * scale)?;
            self.m[i] = ((&self.m[i] * self.beta1)? + (&g * (1.0 - self.beta1))?)?.detach();
            self.v[i] = ((&self.v[i] * self.beta2)? + (g.sqr()? * (1.0 - self.beta2))?)?.detach();
            let mhat = (&self.m[i] / bc1)?;
            let vhat = (&self.v[i] / bc2)?;
            let update = (mhat / (vhat.sqrt()? + self.eps)?)?;
            let var = &self.vars[i];
            var.set(&(var.as_tensor().detach() - (update * self.lr)?)?)?;
        }
        Ok(norm)
    }
}
