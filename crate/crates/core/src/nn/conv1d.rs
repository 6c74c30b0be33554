//! 1-D convolution as gather plus matrix product.
//!
//! candle's own `conv1d` returns wrong kernel and input gradients for some
//! shapes on the CPU backend, so training code goes through this version,
//! whose backward pass is built from slicing, concatenation and `matmul`.

use candle_core::Tensor;

use crate::error::{Error, Result};

/// Cross-correlation of `x: [N, Ci, L]` with `w: [Co, Ci/groups, k]` after
/// zero padding `pad.0` on the left and `pad.1` on the right.
pub fn conv1d(
    x: &Tensor,
    w: &Tensor,
    pad: (usize, usize),
    stride: usize,
    groups: usize,
) -> Result<Tensor> {
    let (n, ci, l) = x.dims3()?;
    let (co, cig, k) = w.dims3()?;
    if groups == 0 || stride == 0 || ci != cig * groups || co % groups != 0 {
        return Err(Error::Shape(format!(
            "conv1d: input {:?}, kernel {:?}, {groups} groups",
            x.dims(),
            w.dims()
        )));
    }
    let lp = l + pad.0 + pad.1;
    if lp < k {
        return Err(Error::Shape(format!(
            "conv1d: length {lp} shorter than kernel {k}"
        )));
    }
    let lo = (lp - k) / stride + 1;
    // Fold the stride into channels, [N, Lf, s·Ci]; the kernel becomes
    // ceil(k/s) taps over s·Ci channels.
    let kf = k.div_ceil(stride);
    let lf = lp.div_ceil(stride).max(lo + kf - 1);
    let xt = x
        .pad_with_zeros(2, pad.0, pad.1 + lf * stride - lp)?
        .transpose(1, 2)?
        .contiguous()?;
    let cog = co / groups;
    let mut outs = Vec::with_capacity(groups);
    for g in 0..groups {
        let xg = if groups == 1 {
            xt.clone()
        } else {
            xt.narrow(2, g * cig, cig)?.contiguous()?
        };
        let xg = xg.reshape((n * lf, stride * cig))?;
        let wg = w
            .narrow(0, g * cog, cog)?
            .permute((2, 1, 0))?
            .pad_with_zeros(0, 0, kf * stride - k)?
            .reshape((kf, stride * cig, cog))?
            .contiguous()?;
        let taps = (0..kf)
            .map(|m| Ok((m, wg.get(m)?)))
            .collect::<Result<Vec<_>>>()?;
        outs.push(
            shifted_matmuls(&xg, &taps)?
                .reshape((n, lf, cog))?
                .narrow(1, 0, lo)?,
        );
    }
    let y = if groups == 1 {
        outs.remove(0)
    } else {
        Tensor::cat(&outs, 2)?
    };
    Ok(y.transpose(1, 2)?.contiguous()?)
}

/// `out[r] = sum_i x[r + shift_i] · w_i` for `x: [R, C]` and `w_i: [C, Co]`.
/// Rows whose shifted reads would run past the end are zero. Each tap is a
/// single matrix product on a contiguous row window of `x`.
pub(crate) fn shifted_matmuls(x: &Tensor, taps: &[(usize, Tensor)]) -> Result<Tensor> {
    let (rows, _) = x.dims2()?;
    let max_shift = taps.iter().map(|t| t.0).max().unwrap_or(0);
    if taps.is_empty() || max_shift >= rows {
        return Err(Error::Shape(format!(
            "{} taps, shift {max_shift}, {rows} rows",
            taps.len()
        )));
    }
    let m = rows - max_shift;
    let mut acc: Option<Tensor> = None;
    for (shift, w) in taps {
        let term = x.narrow(0, *shift, m)?.matmul(w)?;
        acc = Some(match acc {
            None => term,
            Some(a) => (a + term)?,
        });
    }
    let y = acc.expect("at least one tap");
    Ok(y.pad_with_zeros(0, 0, max_shift)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{check, GradCheck};
    use candle_core::{Device, Var};

    fn naive(
        x: &[f64],
        w: &[f64],
        dims: (usize, usize, usize, usize, usize),
        pad: usize,
        stride: usize,
        groups: usize,
    ) -> Vec<f64> {
        let (n, ci, l, co, k) = dims;
        let cig = ci / groups;
        let cog = co / groups;
        let lp = l + 2 * pad;
        let lo = (lp - k) / stride + 1;
        let mut out = vec![0.0; n * co * lo];
        for b in 0..n {
            for o in 0..co {
                let g = o / cog;
                for t in 0..lo {
                    let mut acc = 0.0;
                    for c in 0..cig {
                        for j in 0..k {
                            let pos = (t * stride + j) as isize - pad as isize;
                            if pos >= 0 && (pos as usize) < l {
                                acc += w[(o * cig + c) * k + j]
                                    * x[(b * ci + g * cig + c) * l + pos as usize];
                            }
                        }
                    }
                    out[(b * co + o) * lo + t] = acc;
                }
            }
        }
        out
    }

    fn seq(n: usize, s: f64) -> Vec<f64> {
        (0..n)
            .map(|i| ((i as f64 + 1.0) * 0.731 + s).sin())
            .collect()
    }

    #[test]
    fn matches_direct_loops() {
        for (pad, stride, groups) in [(0, 1, 1), (2, 1, 1), (1, 2, 1), (3, 3, 2), (2, 2, 4)] {
            let dims = (2, 4, 11, 8, 5);
            let xv = seq(2 * 4 * 11, 0.1);
            let wv = seq(8 * (4 / groups) * 5, 0.7);
            let x = Tensor::from_vec(xv.clone(), (2, 4, 11), &Device::Cpu).unwrap();
            let w = Tensor::from_vec(wv.clone(), (8, 4 / groups, 5), &Device::Cpu).unwrap();
            let y: Vec<f64> = conv1d(&x, &w, (pad, pad), stride, groups)
                .unwrap()
                .flatten_all()
                .unwrap()
                .to_vec1()
                .unwrap();
            let want = naive(&xv, &wv, dims, pad, stride, groups);
            assert_eq!(y.len(), want.len());
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x = Var::from_tensor(
            &Tensor::from_vec(seq(2 * 4 * 9, 0.3), (2, 4, 9), &Device::Cpu).unwrap(),
        )
        .unwrap();
        let w = Var::from_tensor(
            &Tensor::from_vec(seq(6 * 2 * 3, 0.9), (6, 2, 3), &Device::Cpu).unwrap(),
        )
        .unwrap();
        let r = check(
            &[x.clone(), w.clone()],
            || {
                Ok(conv1d(x.as_tensor(), w.as_tensor(), (1, 2), 2, 2)?
                    .sqr()?
                    .sum_all()?)
            },
            GradCheck::default(),
        )
        .unwrap();
        assert!(r.rel_err < 1e-6, "{}", r.rel_err);
    }
}
