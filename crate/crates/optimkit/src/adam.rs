//! Bias-corrected Adam.

use diffrast_core::Real;

use crate::error::{shape, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Moment accumulators for one parameter vector. Moments are kept in
/// `f64` regardless of the parameter type.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    pub fn step<T: Real>(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(shape("Adam parameters", self.m.len(), params.len()));
        }
        if grads.len() != params.len() {
            return Err(shape("Adam gradients", params.len(), grads.len()));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let g = g.as_f64();
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let update = lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            *p = T::lit(p.as_f64() - update);
        }
        Ok(())
    }
}

/// `lr0 (lr1 / lr0)^(t / total)`, clamped at the end of the schedule.
pub fn exp_schedule(lr0: f64, lr1: f64, t: usize, total: usize) -> f64 {
    if total == 0 {
        return lr1;
    }
    let f = (t as f64 / total as f64).min(1.0);
    lr0 * (lr1 / lr0).powf(f)
}
