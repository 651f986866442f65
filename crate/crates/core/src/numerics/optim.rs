//! Global-norm gradient clipping and Adam.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tensor::{Parameters, Tensor2};
use crate::error::{Error, Result};

pub fn global_norm<P: Parameters + ?Sized>(grads: &P) -> f64 {
    libm::sqrt(grads.tensors().iter().map(|t| t.sq_norm()).sum())
}

/// Scales every tensor by `max_norm / norm` when the global L2 norm exceeds
/// `max_norm`. Returns the pre-clip norm.
pub fn clip_gradients<P: Parameters + ?Sized>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for t in grads.tensors_mut() {
            t.scale(s);
        }
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias correction; moments are shaped like the parameters they
/// track.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    first_moment: Vec<Tensor2>,
    second_moment: Vec<Tensor2>,
}

impl AdamState {
    pub fn new<P: Parameters + ?Sized>(params: &P, config: AdamConfig) -> Self {
        let zeros: Vec<Tensor2> = params.tensors().iter().map(|t| t.zeros_like()).collect();
        AdamState {
            config,
            step_count: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    pub fn step<P: Parameters + ?Sized>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let g = grads.tensors();
        let p = params.tensors_mut();
        if g.len() != p.len() || p.len() != self.first_moment.len() {
            return Err(Error::ShapeMismatch {
                context: "adam tensor count",
                expected: (self.first_moment.len(), 1),
                found: (g.len(), p.len()),
            });
        }
        for ((pt, gt), mt) in p.iter().zip(&g).zip(&self.first_moment) {
            if pt.shape() != gt.shape() || pt.shape() != mt.shape() {
                return Err(Error::ShapeMismatch {
                    context: "adam tensor",
                    expected: mt.shape(),
                    found: gt.shape(),
                });
            }
        }
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as f64;
        let bc1 = 1.0 - libm::pow(beta1, t);
        let bc2 = 1.0 - libm::pow(beta2, t);
        for (((pt, gt), mt), vt) in p
            .into_iter()
            .zip(g)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            let ps = pt.as_mut_slice();
            let ms = mt.as_mut_slice();
            let vs = vt.as_mut_slice();
            for (i, &gi) in gt.as_slice().iter().enumerate() {
                ms[i] = beta1 * ms[i] + (1.0 - beta1) * gi;
                vs[i] = beta2 * vs[i] + (1.0 - beta2) * gi * gi;
                let m_hat = ms[i] / bc1;
                let v_hat = vs[i] / bc2;
                ps[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}
