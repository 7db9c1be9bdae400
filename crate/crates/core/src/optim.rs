//! Adam with separate learning rates and coupled L2 weight decay for the
//! linear layer, the filter coefficients and the PCD parameters.

use serde::{Deserialize, Serialize};

use crate::model::{Grads, LinearGnnModel};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupConfig {
    pub lr: f64,
    pub weight_decay: f64,
}

impl GroupConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        GroupConfig { lr, weight_decay }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    /// `W` and bias.
    pub linear: GroupConfig,
    pub coeffs: GroupConfig,
    pub pcd: GroupConfig,
}

impl Default for AdamConfig {
    fn default() -> Self {
        let g = GroupConfig::new(0.01, 0.0);
        AdamConfig { linear: g, coeffs: g, pcd: g }
    }
}

/// First and second moments of one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Moments { m: vec![0.0; len], v: vec![0.0; len] }
    }

    /// One Adam update at step `t >= 1`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], t: u32, cfg: GroupConfig) {
        debug_assert_eq!(params.len(), grads.len());
        let c1 = 1.0 - BETA1.powi(t as i32);
        let c2 = 1.0 - BETA2.powi(t as i32);
        for i in 0..params.len() {
            let g = grads[i] + cfg.weight_decay * params[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    t: u32,
    weight: Moments,
    bias: Moments,
    coeffs: Moments,
    eta: Moments,
}

impl Adam {
    pub fn new(model: &LinearGnnModel, config: AdamConfig) -> Self {
        Adam {
            config,
            t: 0,
            weight: Moments::new(model.weight.len()),
            bias: Moments::new(model.bias.as_ref().map_or(0, |b| b.len())),
            coeffs: Moments::new(model.coeffs.len()),
            eta: Moments::new(model.pcd.as_ref().map_or(0, |p| p.eta.len())),
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    /// Fixed-filter coefficients are never updated.
    pub fn step(&mut self, model: &mut LinearGnnModel, grads: &Grads) {
        self.t += 1;
        let t = self.t;
        let cfg = self.config;
        self.weight.step(model.weight.as_mut_slice(), grads.weight.as_slice(), t, cfg.linear);
        if let (Some(b), Some(gb)) = (model.bias.as_mut(), grads.bias.as_ref()) {
            self.bias.step(b.as_mut_slice(), gb.as_slice(), t, cfg.linear);
        }
        if model.spec.is_learnable() {
            self.coeffs.step(model.coeffs.as_mut_slice(), grads.coeffs.as_slice(), t, cfg.coeffs);
        }
        if let (Some(p), Some(ge)) = (model.pcd.as_mut(), grads.eta.as_ref()) {
            self.eta.step(&mut p.eta, ge, t, cfg.pcd);
        }
    }
}
