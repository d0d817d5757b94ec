use super::params::ParamStore;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    /// Critic / generator setting of the Wasserstein GAN trainers.
    pub fn gan(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }

    /// Semi-supervised classifier setting.
    pub fn classifier(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl ParamStore {
    /// One bias-corrected Adam update. Gradients are validated before any
    /// parameter is touched, so a rejected step leaves the store unchanged.
    pub fn adam_step(&mut self, grads: &[Tensor], cfg: &AdamConfig) -> Result<()> {
        if grads.len() != self.params().len() {
            return Err(Error::Config(alloc::format!(
                "{} gradients for {} parameters",
                grads.len(),
                self.params().len()
            )));
        }
        for (p, g) in self.params().iter().zip(grads) {
            if p.value.shape() != g.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    lhs: p.value.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient(p.name()));
            }
        }
        let step = self.moments().step + 1;
        let bc1 = 1.0 - libm::pow(cfg.beta1, step as f64);
        let bc2 = 1.0 - libm::pow(cfg.beta2, step as f64);
        let mut m_all = core::mem::take(&mut self.moments_mut().m);
        let mut v_all = core::mem::take(&mut self.moments_mut().v);
        for (k, (p, g)) in self.params_mut().iter_mut().zip(grads).enumerate() {
            let m = m_all[k].data_mut();
            let v = v_all[k].data_mut();
            for (((w, gi), mi), vi) in p.value.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= cfg.lr * m_hat / (libm::sqrt(v_hat) + cfg.eps);
            }
        }
        let state = self.moments_mut();
        state.m = m_all;
        state.v = v_all;
        state.step = step;
        Ok(())
    }
}
