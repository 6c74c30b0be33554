use candle_core::Tensor;

use super::ops::sigmoid;
use super::params::ParamStore;
use crate::error::{Error, Result};

/// Affine map `x W^T + b` over the last axis.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    pub fn new(ps: &mut ParamStore, name: &str, input: usize, output: usize) -> Result<Self> {
        let bound = 1.0 / (input as f64).sqrt();
        Ok(Self {
            weight: ps.uniform(&format!("{name}.weight"), &[output, input], bound)?,
            bias: ps.uniform(&format!("{name}.bias"), &[output], bound)?,
        })
    }

    pub fn output_size(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let dims = x.dims().to_vec();
        let input = *dims
            .last()
            .ok_or_else(|| Error::Shape("scalar input".into()))?;
        let rows: usize = dims[..dims.len() - 1].iter().product();
        let y = x
            .reshape((rows, input))?
            .matmul(&self.weight.t()?)?
            .broadcast_add(&self.bias)?;
        let mut out = dims;
        *out.last_mut().unwrap() = self.output_size();
        Ok(y.reshape(out)?)
    }
}

#[derive(Debug, Clone)]
struct LstmLayer {
    w_ih: Tensor,
    w_hh: Tensor,
    b_ih: Tensor,
    b_hh: Tensor,
}

/// Unidirectional multi-layer LSTM over `[B, T, I]`, gate order i, f, g, o
/// and parameter names in the usual `weight_ih_l{k}` layout.
#[derive(Debug, Clone)]
pub struct Lstm {
    layers: Vec<LstmLayer>,
    hidden: usize,
}

impl Lstm {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        num_layers: usize,
    ) -> Result<Self> {
        if hidden == 0 || num_layers == 0 {
            return Err(Error::Shape("LSTM needs a hidden size and a layer".into()));
        }
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut layers = Vec::with_capacity(num_layers);
        for k in 0..num_layers {
            let i = if k == 0 { input } else { hidden };
            layers.push(LstmLayer {
                w_ih: ps.uniform(&format!("{name}.weight_ih_l{k}"), &[4 * hidden, i], bound)?,
                w_hh: ps.uniform(
                    &format!("{name}.weight_hh_l{k}"),
                    &[4 * hidden, hidden],
                    bound,
                )?,
                b_ih: ps.uniform(&format!("{name}.bias_ih_l{k}"), &[4 * hidden], bound)?,
                b_hh: ps.uniform(&format!("{name}.bias_hh_l{k}"), &[4 * hidden], bound)?,
            });
        }
        Ok(Self { layers, hidden })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut x = x.clone();
        for layer in &self.layers {
            x = self.layer_forward(layer, &x)?;
        }
        Ok(x)
    }

    fn layer_forward(&self, l: &LstmLayer, x: &Tensor) -> Result<Tensor> {
        let (b, t, i) = x.dims3()?;
        let h_dim = self.hidden;
        let bias = (&l.b_ih + &l.b_hh)?;
        let proj = x
            .reshape((b * t, i))?
            .matmul(&l.w_ih.t()?)?
            .broadcast_add(&bias)?
            .reshape((b, t, 4 * h_dim))?;
        let w_hh_t = l.w_hh.t()?;
        let mut h = Tensor::zeros((b, h_dim), x.dtype(), x.device())?;
        let mut c = h.clone();
        let mut outs = Vec::with_capacity(t);
        for step in 0..t {
            let gates = (proj.narrow(1, step, 1)?.squeeze(1)? + h.matmul(&w_hh_t)?)?;
            let ig = sigmoid(&gates.narrow(1, 0, h_dim)?)?;
            let fg = sigmoid(&gates.narrow(1, h_dim, h_dim)?)?;
            let gg = gates.narrow(1, 2 * h_dim, h_dim)?.tanh()?;
            let og = sigmoid(&gates.narrow(1, 3 * h_dim, h_dim)?)?;
            c = ((fg * &c)? + (ig * gg)?)?;
            h = (og * c.tanh()?)?;
            outs.push(h.clone());
        }
        Ok(Tensor::stack(&outs, 1)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::DType;

    #[test]
    fn single_step_matches_hand_computation() {
        let mut ps = ParamStore::new(DType::F64, 4);
        let lstm = Lstm::new(&mut ps, "l", 2, 1, 1).unwrap();
        let x = Tensor::new(&[[[0.3f64, -0.7]]], ps.device()).unwrap();
        let y: f64 = lstm
            .forward(&x)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1::<f64>()
            .unwrap()[0];
        let l = &lstm.layers[0];
        let w: Vec<Vec<f64>> = l.w_ih.to_vec2().unwrap();
        let b: Vec<f64> = (&l.b_ih + &l.b_hh).unwrap().to_vec1().unwrap();
        let g: Vec<f64> = (0..4)
            .map(|k| w[k][0] * 0.3 - w[k][1] * 0.7 + b[k])
            .collect();
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let c = s(g[0]) * g[2].tanh();
        let want = s(g[3]) * c.tanh();
        assert!((y - want).abs() < 1e-12);
    }

    #[test]
    fn causal_and_shaped() {
        let mut ps = ParamStore::new(DType::F64, 5);
        let lstm = Lstm::new(&mut ps, "l", 3, 4, 2).unwrap();
        let x = ps.uniform("x", &[2, 5, 3], 1.0).unwrap();
        let y = lstm.forward(&x).unwrap();
        assert_eq!(y.dims(), &[2, 5, 4]);
        let x2 = Tensor::cat(
            &[
                x.narrow(1, 0, 3).unwrap(),
                (x.narrow(1, 3, 2).unwrap() + 1.0).unwrap(),
            ],
            1,
        )
        .unwrap();
        let y2 = lstm.forward(&x2).unwrap();
        let d = (y.narrow(1, 0, 3).unwrap() - y2.narrow(1, 0, 3).unwrap()).unwrap();
        assert_eq!(
            d.abs()
                .unwrap()
                .max_all()
                .unwrap()
                .to_scalar::<f64>()
                .unwrap(),
            0.0
        );
    }
}
