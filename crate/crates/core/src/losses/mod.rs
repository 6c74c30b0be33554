//! Training objectives: SI-SNR, power-law compressed spectral loss,
//! magnitude MSE, waveform discriminators with least-squares adversarial
//! losses, and the weighted per-stage composites.

mod adversarial;
mod composite;
mod discriminator;
mod signal;

pub use adversarial::{adversarial_losses, feature_matching, lsgan_disc_loss, lsgan_gen_loss};
pub use composite::{
    stage1_composite, stage2_composite, LossWeights, Stage1Parts, Stage1Weights, Stage2Parts,
    Stage2Weights,
};
pub use discriminator::{period_view, DiscConfig, DiscLayer, DiscOutput, Discriminators};
pub use signal::{
    mag_mse_loss, plc_loss, si_snr_db, si_snr_loss, si_snr_loss_tensor, SI_SNR_CAP_DB,
};
