use alloc::format;

use crate::error::{Error, Result};
use crate::nn::AdamConfig;

/// Hyper-parameters and ablation switches shared by both trainers.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Gradient-penalty weight.
    pub lambda1: f64,
    /// Consistency-term weight.
    pub lambda2: f64,
    /// Hinge offset of the consistency term; `f64::INFINITY` disables it.
    pub m_prime: f64,
    /// Weight of the second-to-last feature distance inside the CT.
    pub ct_feature_weight: f64,
    /// Critic updates per generator update.
    pub critic_iters: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch: usize,
    /// Generator iterations of the Wasserstein trainer.
    pub total_iters: usize,
    /// CT weight of the semi-supervised discriminator loss.
    pub semi_lambda: f64,
    /// Passes over the unlabelled set in the semi-supervised trainer.
    pub epochs: usize,
    pub enable_ct: bool,
    pub enable_gp: bool,
    pub enable_gan: bool,
    pub enable_ct_feature_term: bool,
    pub enable_critic_dropout: bool,
    /// Let the loss and GP passes draw dropout masks as well.
    pub dropout_in_main_passes: bool,
    /// Semi-supervised CT compares logits instead of class probabilities.
    pub semi_ct_on_logits: bool,
    pub seed: u64,
    /// Generator iterations between metric records (0 = never).
    pub metric_every: usize,
    /// Generator iterations between checkpoints (0 = never).
    pub checkpoint_every: usize,
    /// Rows used by the gradient-norm and pairwise probes.
    pub probe_size: usize,
    /// Rows used per critic-cost evaluation.
    pub eval_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda1: 10.0,
            lambda2: 2.0,
            m_prime: 0.0,
            ct_feature_weight: 0.1,
            critic_iters: 5,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.9,
            adam_eps: 1e-8,
            batch: 64,
            total_iters: 10_000,
            semi_lambda: 1.0,
            epochs: 300,
            enable_ct: true,
            enable_gp: true,
            enable_gan: true,
            enable_ct_feature_term: true,
            enable_critic_dropout: true,
            dropout_in_main_passes: false,
            semi_ct_on_logits: false,
            seed: 0,
            metric_every: 20,
            checkpoint_every: 0,
            probe_size: 64,
            eval_size: 512,
        }
    }
}

impl TrainConfig {
    /// Semi-supervised MNIST setting: learning rate 0.003, CT weight 1.
    pub fn semi_defaults() -> Self {
        Self {
            lr: 3e-3,
            beta1: 0.5,
            beta2: 0.999,
            batch: 100,
            metric_every: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("m_prime", self.m_prime),
            ("ct_feature_weight", self.ct_feature_weight),
            ("semi_lambda", self.semi_lambda),
        ];
        for (name, v) in nonneg {
            if v.is_nan() || v < 0.0 {
                return Err(Error::Config(format!("{name} = {v} must be >= 0")));
            }
            if v.is_infinite() && name != "m_prime" {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if self.batch < 2 {
            return Err(Error::Config(format!("batch = {} must be >= 2", self.batch)));
        }
        if self.critic_iters < 1 {
            return Err(Error::Config("critic_iters must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr = {} must be positive", self.lr)));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.adam_eps.is_finite() && self.adam_eps >= 0.0) {
            return Err(Error::Config("adam_eps must be finite and >= 0".into()));
        }
        if self.probe_size < 2 || !self.probe_size.is_multiple_of(2) {
            return Err(Error::Config(format!("probe_size = {} must be even and >= 2", self.probe_size)));
        }
        if self.eval_size < 1 {
            return Err(Error::Config("eval_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    pub fn gp_active(&self) -> bool {
        self.enable_gp && self.lambda1 > 0.0
    }

    pub fn ct_active(&self) -> bool {
        self.enable_ct && self.lambda2 > 0.0
    }

    pub fn feature_weight(&self) -> f64 {
        if self.enable_ct_feature_term {
            self.ct_feature_weight
        } else {
            0.0
        }
    }
}

/// True and relaxed Lipschitz bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzConfig {
    pub m: f64,
    pub m_prime: f64,
}

impl LipschitzConfig {
    pub fn new(m: f64, m_prime: f64) -> Result<Self> {
        if m.is_nan() || m < 0.0 || m_prime.is_nan() || m_prime < 0.0 {
            return Err(Error::Config(format!("Lipschitz bounds must be >= 0, got M = {m}, M' = {m_prime}")));
        }
        Ok(Self { m, m_prime })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!((c.lambda1, c.lambda2, c.critic_iters, c.lr, c.batch, c.m_prime), (10.0, 2.0, 5, 2e-4, 64, 0.0));
        TrainConfig::semi_defaults().validate().unwrap();
    }

    #[test]
    fn rejects_invalid_values() {
        let bad = [
            TrainConfig { lambda1: -1.0, ..Default::default() },
            TrainConfig { batch: 1, ..Default::default() },
            TrainConfig { critic_iters: 0, ..Default::default() },
            TrainConfig { lr: 0.0, ..Default::default() },
            TrainConfig { probe_size: 3, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        TrainConfig { m_prime: f64::INFINITY, ..Default::default() }.validate().unwrap();
        assert!(LipschitzConfig::new(1.0, -0.1).is_err());
    }
}
