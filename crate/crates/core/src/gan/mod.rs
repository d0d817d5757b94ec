//! Loss terms and the two trainers: the Wasserstein critic/generator loop
//! (CT-GAN, GP-WGAN and ablations) and the semi-supervised K+1 trainer.

mod config;
mod losses;
mod semi;
mod train;

pub use config::{LipschitzConfig, TrainConfig};
pub use losses::{
    consistency_term, ct_critic_loss, ct_pass_options, feature_matching_loss, generator_loss_wgan, gradient_penalty,
    has_active_noise, interpolate, interpolate_with, main_pass_options, semi_discriminator_loss, semi_main_options,
    wasserstein_critic_core, Bound, CriticLoss, CriticNoise, GeneratorLoss, LossBreakdown, SemiBatch, SemiLoss,
    SemiNoise,
};
pub use semi::{classification_error, train_semisup, SemiArch, SemiRun};
pub use train::{generate, train_ctgan, CoverageSpec, GanArch, GanRun, NoObserver, NoiseDist, TrainObserver, TrainerSnapshot};
