//! Bias-corrected adaptive-moment updates with decoupled weight decay.
//!
//! For every real component with gradient `g`, at step `t ≥ 1`:
//!
//! ```text
//! m ← β₁ m + (1 − β₁) g
//! v ← β₂ v + (1 − β₂) g²
//! p ← p − lr · ( m/(1 − β₁ᵗ) / (√(v/(1 − β₂ᵗ)) + eps) + wd · p )
//! ```
//!
//! The `wd · p` term applies only to tensors flagged for decay (lift, W, Q
//! magnitudes and the classifier weight).

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{GescError, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub step: u64,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(params: &ModelParams, cfg: &TrainConfig) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.data.len()).collect();
        Self {
            step: 0,
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Applies one update in place and re-projects parameter constraints.
    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) -> Result<()> {
        let gviews = grads.tensors();
        let mut pviews = params.tensors_mut();
        if gviews.len() != pviews.len() || gviews.len() != self.first.len() {
            return Err(GescError::Dimension {
                what: "optimizer tensor count",
                expected: self.first.len(),
                found: gviews.len(),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(t));
        for (k, (p, g)) in pviews.iter_mut().zip(&gviews).enumerate() {
            if p.data.len() != g.data.len() || p.data.len() != self.first[k].len() {
                return Err(GescError::Dimension {
                    what: "optimizer tensor",
                    expected: self.first[k].len(),
                    found: g.data.len(),
                });
            }
            let decay = if p.decay { self.weight_decay } else { 0.0 };
            let (m, v) = (&mut self.first[k], &mut self.second[k]);
            for j in 0..p.data.len() {
                let gj = g.data[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let update = (m[j] / c1) / (libm::sqrt(v[j] / c2) + self.eps);
                p.data[j] -= self.lr * (update + decay * p.data[j]);
            }
        }
        drop(pviews);
        params.project_constraints();
        Ok(())
    }
}
