use serde::{Deserialize, Serialize};

use super::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.99,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: ParamStore,
    pub v: ParamStore,
}

impl AdamState {
    pub fn new(like: &ParamStore) -> Self {
        Self {
            step: 0,
            m: like.zeros_like(),
            v: like.zeros_like(),
        }
    }

    /// One bias-corrected update. Parameters for which `frozen` returns true
    /// keep both their values and their moments.
    pub fn update(
        &mut self,
        cfg: &AdamConfig,
        params: &mut ParamStore,
        grads: &ParamStore,
        lr: f64,
        frozen: impl Fn(&str) -> bool,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            if frozen(&p.name) {
                continue;
            }
            for (((x, &g), m), v) in p.data.iter_mut().zip(&g.data).zip(&mut m.data).zip(&mut v.data) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                if lr != 0.0 {
                    *x -= lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
                }
            }
        }
    }
}
