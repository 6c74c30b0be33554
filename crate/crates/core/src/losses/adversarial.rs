use candle_core::Tensor;

use super::discriminator::{DiscOutput, Discriminators};
use crate::error::{Error, Result};

fn mean_of(terms: Vec<Tensor>) -> Result<Tensor> {
    let n = terms.len();
    if n == 0 {
        return Err(Error::invalid("no sub-discriminator outputs"));
    }
    Ok((Tensor::stack(&terms, 0)?.sum_all()? / n as f64)?)
}

/// Least-squares discriminator loss, averaged over sub-discriminators:
/// mean (D(real) - 1)^2 + mean D(fake)^2.
pub fn lsgan_disc_loss(real: &[Tensor], fake: &[Tensor]) -> Result<Tensor> {
    if real.len() != fake.len() {
        return Err(Error::invalid("real and fake score lists differ in length"));
    }
    let terms = real
        .iter()
        .zip(fake)
        .map(|(r, f)| Ok(((r - 1.0)?.sqr()?.mean_all()? + f.sqr()?.mean_all()?)?))
        .collect::<Result<Vec<_>>>()?;
    mean_of(terms)
}

/// Least-squares generator loss, averaged over sub-discriminators:
/// mean (D(fake) - 1)^2.
pub fn lsgan_gen_loss(fake: &[Tensor]) -> Result<Tensor> {
    let terms = fake
        .iter()
        .map(|f| Ok((f - 1.0)?.sqr()?.mean_all()?))
        .collect::<Result<Vec<_>>>()?;
    mean_of(terms)
}

/// Mean absolute difference of intermediate activations, averaged over all
/// layers of all sub-discriminators. Real activations are treated as fixed.
pub fn feature_matching(real: &[DiscOutput], fake: &[DiscOutput]) -> Result<Tensor> {
    let mut terms = Vec::new();
    for (r, f) in real.iter().zip(fake) {
        for (a, b) in r.features.iter().zip(&f.features) {
            terms.push((b - a.detach())?.abs()?.mean_all()?);
        }
    }
    mean_of(terms)
}

/// Generator and discriminator losses for one batch. The discriminator loss
/// sees `fake` detached; the generator loss optionally adds feature matching.
pub fn adversarial_losses(
    disc: &Discriminators,
    real: &Tensor,
    fake: &Tensor,
    with_feature_matching: bool,
) -> Result<(Tensor, Tensor)> {
    let d_real = disc.forward(real)?;
    let d_fake_detached = disc.forward(&fake.detach())?;
    let scores = |o: &[DiscOutput]| o.iter().map(|x| x.score.clone()).collect::<Vec<_>>();
    let disc_loss = lsgan_disc_loss(&scores(&d_real), &scores(&d_fake_detached))?;
    let d_fake = disc.forward(fake)?;
    let mut gen_loss = lsgan_gen_loss(&scores(&d_fake))?;
    if with_feature_matching {
        gen_loss = (gen_loss + feature_matching(&d_real, &d_fake)?)?;
    }
    Ok((gen_loss, disc_loss))
}
