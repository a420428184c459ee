//! Central finite differences against the hand-written reverse pass.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::VerificationReport;
use crate::config::GescConfig;
use crate::error::Result;
use crate::graph::{Dataset, Graph, Splits};
use crate::layer::ParamClass;
use crate::model::{backward, total_loss, ModelParams};
use crate::rng::{rng_for, stream, ChaCha8Rng};

/// Relative tolerance, applied where either derivative exceeds
/// [`GRADIENT_FLOOR`] in magnitude.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
pub const GRADIENT_FLOOR: f64 = 1e-6;
const STEP: f64 = 1e-5;

/// Six nodes on a path plus up to four random chords, random features in
/// `[-1, 1)`, labels `i mod classes`, four training nodes.
pub fn gradient_instance(seed: u64, in_dim: usize, classes: usize) -> Result<Dataset> {
    let mut rng = rng_for(seed, stream::VERIFY);
    let n = 6;
    let mut pairs = vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)];
    for _ in 0..4 {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && !pairs.contains(&(a.min(b), a.max(b))) {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    let graph = Graph::new(n, &pairs)?;
    let features: Vec<f64> = (0..n * in_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let splits = Splits::from_indices(n, &[0, 1, 2, 3], &[4], &[5])?;
    Dataset::new(graph, features, in_dim, labels, classes, splits)
}

/// Moves every scalar off its neutral initialization so each path of the
/// loss carries signal.
fn scramble(params: &mut ModelParams, rng: &mut ChaCha8Rng) {
    for layer in &mut params.layers {
        for t in &mut layer.theta {
            *t = rng.random_range(-3.0..3.0);
        }
        for b in &mut layer.modrelu_bias {
            *b = rng.random_range(-0.05..0.05);
        }
        for h in &mut layer.heads {
            h.sign_scale = rng.random_range(0.5..2.0);
            h.sign_shift = rng.random_range(-0.5..0.5);
            for a in &mut h.mix_weights {
                *a = rng.random_range(-1.0..1.0);
            }
            h.mix_bias = rng.random_range(-0.5..0.5);
            h.log_gamma = rng.random_range(-0.3..0.3);
        }
    }
    for s in &mut params.norm_scale {
        *s = rng.random_range(0.5..1.5);
    }
    for s in &mut params.norm_shift {
        *s = rng.random_range(-0.2..0.2);
    }
    for b in &mut params.cls_bias {
        *b = rng.random_range(-0.2..0.2);
    }
}

/// Compares every gradient component of the training loss on
/// [`gradient_instance`] with a central difference. Metrics hold the worst
/// relative error per parameter class (`class/<name>`) and the number of
/// frozen components whose gradient was not exactly zero.
pub fn gradient_check(cfg: &GescConfig, seed: u64) -> Result<VerificationReport> {
    let data = gradient_instance(seed, 3, 3)?;
    let mut rng = rng_for(seed, stream::INIT);
    let mut params = ModelParams::for_dataset(&cfg.model, &data, &mut rng)?;
    scramble(&mut params, &mut rng);
    let loss_rng = rng_for(seed, stream::TRAIN);

    let (_, mut tape) = total_loss(&params, &data, &cfg.train, &mut loss_rng.clone())?;
    let grads = backward(&params, &data, &mut tape)?;
    let loss = |p: &ModelParams| -> Result<f64> { Ok(total_loss(p, &data, &cfg.train, &mut loss_rng.clone())?.0.total) };

    let layout: Vec<(ParamClass, usize)> = params.tensors().iter().map(|t| (t.class, t.data.len())).collect();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data.to_vec()).collect();
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut max_dev: f64 = 0.0;
    let mut checked = 0;
    let mut frozen_nonzero = 0;
    for (ti, &(class, len)) in layout.iter().enumerate() {
        if class == ParamClass::Theta && cfg.model.freeze_transport {
            frozen_nonzero += analytic[ti].iter().filter(|g| **g != 0.0).count();
            continue;
        }
        for k in 0..len {
            let base = params.tensors()[ti].data[k];
            let mut p = params.clone();
            p.tensors_mut()[ti].data[k] = base + STEP;
            let up = loss(&p)?;
            p.tensors_mut()[ti].data[k] = base - STEP;
            let down = loss(&p)?;
            let fd = (up - down) / (2.0 * STEP);
            let an = analytic[ti][k];
            let scale = fd.abs().max(an.abs());
            let err = if scale > GRADIENT_FLOOR { (fd - an).abs() / scale } else { 0.0 };
            let e = worst.entry(format!("class/{class:?}")).or_insert(0.0);
            *e = e.max(err);
            max_dev = max_dev.max(err);
            checked += 1;
        }
    }
    let mut report = VerificationReport::new("gradients", checked, max_dev, GRADIENT_TOLERANCE)
        .with("frozen_nonzero", frozen_nonzero as f64);
    report.pass &= frozen_nonzero == 0;
    report.metrics.extend(worst);
    Ok(report)
}
