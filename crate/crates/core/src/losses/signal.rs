use candle_core::Tensor;

use crate::error::{Error, Result};
use crate::nn::ComplexTensor;

/// SI-SNR values are clamped to `[-CAP, CAP]` dB.
pub const SI_SNR_CAP_DB: f64 = 50.0;
const EPS: f64 = 1e-8;
/// Absolute guard so that a silent estimate gives a finite ratio.
const TINY: f64 = 1e-30;
const MAG_FLOOR: f64 = 1e-12;

/// Scale-invariant SNR in dB of `est` against `reference`, both made
/// zero-mean first.
pub fn si_snr_db(est: &[f64], reference: &[f64]) -> Result<f64> {
    if est.len() != reference.len() || est.is_empty() {
        return Err(Error::invalid("SI-SNR needs equal, non-zero lengths"));
    }
    let n = est.len() as f64;
    let me = est.iter().sum::<f64>() / n;
    let mr = reference.iter().sum::<f64>() / n;
    let e: Vec<f64> = est.iter().map(|v| v - me).collect();
    let r: Vec<f64> = reference.iter().map(|v| v - mr).collect();
    let rr: f64 = r.iter().map(|v| v * v).sum();
    if rr == 0.0 {
        return Err(Error::invalid("SI-SNR reference is silent"));
    }
    let alpha = e.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / (rr + EPS);
    let ss = alpha * alpha * rr;
    let nn: f64 = e.iter().zip(&r).map(|(a, b)| (a - alpha * b).powi(2)).sum();
    // The regulariser scales with the estimate energy, which keeps the
    // ratio exactly invariant to the estimate's gain.
    let guard = EPS * e.iter().map(|v| v * v).sum::<f64>() + TINY;
    Ok((10.0 * ((ss + guard) / (nn + guard)).log10()).clamp(-SI_SNR_CAP_DB, SI_SNR_CAP_DB))
}

/// Negative SI-SNR.
pub fn si_snr_loss(est: &[f64], reference: &[f64]) -> Result<f64> {
    Ok(-si_snr_db(est, reference)?)
}

/// Batch-mean negative SI-SNR of `[B, L]` waveforms; same definition as
/// [`si_snr_db`].
pub fn si_snr_loss_tensor(est: &Tensor, reference: &Tensor) -> Result<Tensor> {
    if est.dims() != reference.dims() || est.rank() != 2 {
        return Err(Error::Shape(format!(
            "SI-SNR needs equal [B, L] shapes, got {:?} and {:?}",
            est.dims(),
            reference.dims()
        )));
    }
    let e = est.broadcast_sub(&est.mean_keepdim(1)?)?;
    let r = reference.broadcast_sub(&reference.mean_keepdim(1)?)?;
    let rr = r.sqr()?.sum_keepdim(1)?;
    let alpha = ((&e * &r)?.sum_keepdim(1)? / (&rr + EPS)?)?;
    let s = r.broadcast_mul(&alpha)?;
    let ss = s.sqr()?.sum_keepdim(1)?;
    let nn = (&e - &s)?.sqr()?.sum_keepdim(1)?;
    let guard = ((e.sqr()?.sum_keepdim(1)? * EPS)? + TINY)?;
    let ratio = ((ss + &guard)? / (nn + &guard)?)?;
    let db = (ratio.log()? * (10.0 / std::f64::consts::LN_10))?;
    let db = db.clamp(-SI_SNR_CAP_DB, SI_SNR_CAP_DB)?;
    Ok(db.mean_all()?.neg()?)
}

fn magnitude(x: &ComplexTensor) -> Result<Tensor> {
    Ok(((x.re()?.sqr()? + x.im()?.sqr()?)? + MAG_FLOOR)?.sqrt()?)
}

fn check_same(a: &ComplexTensor, b: &ComplexTensor) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!(
            "spectra differ in shape: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// Power-law compressed loss with exponent `c`: the mean squared difference
/// of `|S|^c` plus the mean squared magnitude of the difference of
/// `S |S|^(c-1)`. Magnitudes carry a 1e-12 floor under the square root.
pub fn plc_loss(est: &ComplexTensor, reference: &ComplexTensor, c: f64) -> Result<Tensor> {
    check_same(est, reference)?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid("compression exponent must be in (0, 1]"));
    }
    let me = magnitude(est)?;
    let mr = magnitude(reference)?;
    let ce = me.powf(c)?;
    let cr = mr.powf(c)?;
    let mag_term = (&ce - &cr)?.sqr()?.mean_all()?;
    let ge = me.powf(c - 1.0)?;
    let gr = mr.powf(c - 1.0)?;
    let dre = ((est.re()? * &ge)? - (reference.re()? * &gr)?)?;
    let dim = ((est.im()? * &ge)? - (reference.im()? * &gr)?)?;
    let complex_term = (dre.sqr()? + dim.sqr()?)?.mean_all()?;
    Ok((mag_term + complex_term)?)
}

/// Mean over bins of `(|est| - |ref|)^2`.
pub fn mag_mse_loss(est: &ComplexTensor, reference: &ComplexTensor) -> Result<Tensor> {
    check_same(est, reference)?;
    Ok((magnitude(est)? - magnitude(reference)?)?
        .sqr()?
        .mean_all()?)
}
