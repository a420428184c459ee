//! The training loop with validation early stopping.

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::GescConfig;
use crate::error::{GescError, Result};
use crate::graph::Dataset;
use crate::model::{accuracy, backward, predict, total_loss, ModelParams};
use crate::optim::OptimizerState;
use crate::rng::{rng_for, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss_ce: f64,
    pub loss_js: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best validation accuracy (earliest on ties).
    pub params: ModelParams,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn best(&self) -> &EpochMetrics {
        &self.history[self.best_epoch]
    }
}

fn masked_accuracy(logits: &[f64], data: &Dataset, mask: &[bool]) -> f64 {
    // empty masks report NaN rather than aborting a run
    accuracy(logits, &data.labels, mask, data.num_classes).unwrap_or(f64::NAN)
}

/// Trains from a fresh initialization drawn from `cfg.train.seed`.
pub fn train(data: &Dataset, cfg: &GescConfig) -> Result<TrainOutcome> {
    train_with(data, cfg, |_| {})
}

/// [`train`] with a per-epoch observer.
pub fn train_with<F: FnMut(&EpochMetrics)>(data: &Dataset, cfg: &GescConfig, mut observe: F) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !data.has_splits() {
        return Err(GescError::EmptyMask);
    }
    let seed = cfg.train.seed;
    let mut params = ModelParams::for_dataset(&cfg.model, data, &mut rng_for(seed, stream::INIT))?;
    let mut opt = OptimizerState::new(&params, &cfg.train);
    let mut rng = rng_for(seed, stream::TRAIN);

    let mut best = params.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut history = Vec::new();
    for epoch in 0..cfg.train.max_epochs {
        let wrap = |e: GescError| GescError::Training { epoch, source: Box::new(e) };
        let (loss, mut tape) = total_loss(&params, data, &cfg.train, &mut rng).map_err(wrap)?;
        let grads = backward(&params, data, &mut tape).map_err(wrap)?;
        drop(tape);
        opt.step(&mut params, &grads).map_err(wrap)?;
        if !params.is_finite() {
            return Err(wrap(GescError::NonFinite { stage: "parameters" }));
        }
        let logits = predict(&params, data).map_err(wrap)?;
        let m = EpochMetrics {
            epoch,
            loss_ce: loss.ce,
            loss_js: loss.js,
            train_acc: masked_accuracy(&logits, data, &data.splits.train),
            val_acc: masked_accuracy(&logits, data, &data.splits.val),
            test_acc: masked_accuracy(&logits, data, &data.splits.test),
        };
        observe(&m);
        history.push(m);
        if m.val_acc > best_val || (best_val.is_infinite() && m.val_acc.is_nan()) {
            best_val = if m.val_acc.is_nan() { f64::MIN } else { m.val_acc };
            best = params.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.train.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
    })
}
