//! Layer stack, complex lift, real readout, losses and the joined reverse
//! pass over the three forward passes of a training step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexMatrix;
use crate::config::{ModelConfig, TrainConfig};
use crate::error::{GescError, Result};
use crate::graph::{sample_edge_drop_mask, Dataset, Graph};
use crate::layer::{layer_backward, layer_forward, view, view_mut, LayerCache, LayerParams, ParamClass, TensorView, TensorViewMut};
use crate::rng::ChaCha8Rng;

/// Variance guard of the readout layer normalization.
pub const READOUT_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub in_dim: usize,
    pub num_classes: usize,
    /// Row-major `in_dim × d`.
    pub lift_re: Vec<f64>,
    pub lift_im: Vec<f64>,
    pub layers: Vec<LayerParams>,
    /// Length `2d`.
    pub norm_scale: Vec<f64>,
    pub norm_shift: Vec<f64>,
    /// Row-major `2d × C`.
    pub cls_weight: Vec<f64>,
    pub cls_bias: Vec<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, variance: f64) -> Vec<f64> {
    let a = libm::sqrt(3.0 * variance);
    (0..n).map(|_| rng.random_range(-a..a)).collect()
}

impl ModelParams {
    pub fn init(cfg: &ModelConfig, in_dim: usize, num_classes: usize, num_edges: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        if in_dim == 0 {
            return Err(GescError::Parameter("input feature dimension must be positive"));
        }
        if num_classes < 2 {
            return Err(GescError::Parameter("at least two classes are required"));
        }
        let d = cfg.hidden_dim;
        let lift_var = 1.0 / (2.0 * in_dim as f64);
        let lift_re = uniform(rng, in_dim * d, lift_var);
        let lift_im = uniform(rng, in_dim * d, lift_var);
        let layers = (0..cfg.layers).map(|_| LayerParams::init(cfg, num_edges, rng)).collect();
        let cls_weight = uniform(rng, 2 * d * num_classes, 1.0 / (2.0 * d as f64));
        Ok(Self {
            config: cfg.clone(),
            in_dim,
            num_classes,
            lift_re,
            lift_im,
            layers,
            norm_scale: vec![1.0; 2 * d],
            norm_shift: vec![0.0; 2 * d],
            cls_weight,
            cls_bias: vec![0.0; num_classes],
        })
    }

    /// Initializes for a dataset.
    pub fn for_dataset(cfg: &ModelConfig, data: &Dataset, rng: &mut ChaCha8Rng) -> Result<Self> {
        Self::init(cfg, data.feature_dim, data.num_classes, data.graph.num_edges(), rng)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            in_dim: self.in_dim,
            num_classes: self.num_classes,
            lift_re: vec![0.0; self.lift_re.len()],
            lift_im: vec![0.0; self.lift_im.len()],
            layers: self.layers.iter().map(LayerParams::zeros_like).collect(),
            norm_scale: vec![0.0; self.norm_scale.len()],
            norm_shift: vec![0.0; self.norm_shift.len()],
            cls_weight: vec![0.0; self.cls_weight.len()],
            cls_bias: vec![0.0; self.cls_bias.len()],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    /// Every real parameter tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut out = vec![
            view("lift.re".into(), ParamClass::Lift, true, &self.lift_re),
            view("lift.im".into(), ParamClass::Lift, true, &self.lift_im),
        ];
        for (l, layer) in self.layers.iter().enumerate() {
            out.extend(layer.tensors(&format!("layer{l}")));
        }
        out.push(view("readout.scale".into(), ParamClass::ReadoutNorm, false, &self.norm_scale));
        out.push(view("readout.shift".into(), ParamClass::ReadoutNorm, false, &self.norm_shift));
        out.push(view("classifier.weight".into(), ParamClass::Classifier, true, &self.cls_weight));
        out.push(view("classifier.bias".into(), ParamClass::Classifier, false, &self.cls_bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_>> {
        let mut out = vec![
            view_mut("lift.re".into(), ParamClass::Lift, true, &mut self.lift_re),
            view_mut("lift.im".into(), ParamClass::Lift, true, &mut self.lift_im),
        ];
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.extend(layer.tensors_mut(&format!("layer{l}")));
        }
        out.push(view_mut("readout.scale".into(), ParamClass::ReadoutNorm, false, &mut self.norm_scale));
        out.push(view_mut("readout.shift".into(), ParamClass::ReadoutNorm, false, &mut self.norm_shift));
        out.push(view_mut("classifier.weight".into(), ParamClass::Classifier, true, &mut self.cls_weight));
        out.push(view_mut("classifier.bias".into(), ParamClass::Classifier, false, &mut self.cls_bias));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    pub fn project_constraints(&mut self) {
        for l in &mut self.layers {
            l.project_constraints();
        }
    }

    /// Checks the parameters against a dataset's shape.
    pub fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.feature_dim != self.in_dim {
            return Err(GescError::Dimension {
                what: "input feature dimension",
                expected: self.in_dim,
                found: data.feature_dim,
            });
        }
        if data.num_classes != self.num_classes {
            return Err(GescError::Dimension {
                what: "class count",
                expected: self.num_classes,
                found: data.num_classes,
            });
        }
        for l in &self.layers {
            if l.theta.len() != data.graph.num_edges() {
                return Err(GescError::Dimension {
                    what: "transport phases",
                    expected: data.graph.num_edges(),
                    found: l.theta.len(),
                });
            }
        }
        Ok(())
    }
}

/// `H = X W_re + i X W_im`; zero features are skipped.
pub fn complex_lift(features: &[f64], in_dim: usize, w_re: &[f64], w_im: &[f64], d: usize) -> Result<ComplexMatrix> {
    if in_dim == 0 || !features.len().is_multiple_of(in_dim) {
        return Err(GescError::Dimension {
            what: "feature matrix width",
            expected: in_dim,
            found: features.len(),
        });
    }
    if w_re.len() != in_dim * d || w_im.len() != in_dim * d {
        return Err(GescError::Dimension {
            what: "lift weights",
            expected: in_dim * d,
            found: w_re.len().min(w_im.len()),
        });
    }
    let n = features.len() / in_dim;
    let mut h = ComplexMatrix::zeros(n, d);
    for i in 0..n {
        let x = &features[i * in_dim..(i + 1) * in_dim];
        let (hr, hi) = h.row_mut(i);
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let (wr, wi) = (&w_re[k * d..(k + 1) * d], &w_im[k * d..(k + 1) * d]);
            for c in 0..d {
                hr[c] += xk * wr[c];
                hi[c] += xk * wi[c];
            }
        }
    }
    Ok(h)
}

fn lift_backward(features: &[f64], in_dim: usize, d: usize, g: &ComplexMatrix, g_re: &mut [f64], g_im: &mut [f64]) {
    for i in 0..g.rows() {
        let x = &features[i * in_dim..(i + 1) * in_dim];
        let (gr, gi) = g.row(i);
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let (wr, wi) = (&mut g_re[k * d..(k + 1) * d], &mut g_im[k * d..(k + 1) * d]);
            for c in 0..d {
                wr[c] += xk * gr[c];
                wi[c] += xk * gi[c];
            }
        }
    }
}

/// `z = [Re h, Im h]`.
pub fn readout_features(h: &ComplexMatrix, i: usize) -> Vec<f64> {
    let (r, im) = h.row(i);
    r.iter().chain(im).copied().collect()
}

/// Readout state of one pass.
#[derive(Debug, Clone)]
struct ReadoutCache {
    /// Normalized features, `N × 2d`.
    zn: Vec<f64>,
    inv_std: Vec<f64>,
    /// Inverted-dropout multipliers (`0` or `1/(1−p)`); empty when off.
    keep: Vec<f64>,
    /// Classifier input after dropout.
    y: Vec<f64>,
}

fn readout(params: &ModelParams, h: &ComplexMatrix, dropout: Option<(f64, &mut ChaCha8Rng)>) -> (Vec<f64>, ReadoutCache) {
    let n = h.rows();
    let w = 2 * h.cols();
    let c = params.num_classes;
    let mut zn = vec![0.0; n * w];
    let mut inv_std = vec![0.0; n];
    for i in 0..n {
        let z = readout_features(h, i);
        let mean = z.iter().sum::<f64>() / w as f64;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w as f64;
        let inv = 1.0 / libm::sqrt(var + READOUT_NORM_EPS);
        inv_std[i] = inv;
        for k in 0..w {
            zn[i * w + k] = (z[k] - mean) * inv;
        }
    }
    let mut y: Vec<f64> = zn
        .iter()
        .enumerate()
        .map(|(idx, v)| v * params.norm_scale[idx % w] + params.norm_shift[idx % w])
        .collect();
    let mut keep = Vec::new();
    if let Some((p, rng)) = dropout {
        if p > 0.0 {
            let scale = 1.0 / (1.0 - p);
            keep = (0..n * w).map(|_| if rng.random::<f64>() >= p { scale } else { 0.0 }).collect();
            for (v, k) in y.iter_mut().zip(&keep) {
                *v *= k;
            }
        }
    }
    let mut logits = vec![0.0; n * c];
    for i in 0..n {
        let out = &mut logits[i * c..(i + 1) * c];
        out.copy_from_slice(&params.cls_bias);
        for k in 0..w {
            let yk = y[i * w + k];
            if yk == 0.0 {
                continue;
            }
            let row = &params.cls_weight[k * c..(k + 1) * c];
            for (o, wv) in out.iter_mut().zip(row) {
                *o += yk * wv;
            }
        }
    }
    (logits, ReadoutCache { zn, inv_std, keep, y })
}

fn readout_backward(params: &ModelParams, cache: &ReadoutCache, g_logits: &[f64], grads: &mut ModelParams) -> ComplexMatrix {
    let c = params.num_classes;
    let d = params.hidden_dim();
    let w = 2 * d;
    let n = cache.inv_std.len();
    let mut g_h = ComplexMatrix::zeros(n, d);
    let mut gy = vec![0.0; w];
    let mut gzn = vec![0.0; w];
    for i in 0..n {
        let gl = &g_logits[i * c..(i + 1) * c];
        if gl.iter().all(|v| *v == 0.0) {
            continue;
        }
        for (b, g) in grads.cls_bias.iter_mut().zip(gl) {
            *b += g;
        }
        for k in 0..w {
            let row = &params.cls_weight[k * c..(k + 1) * c];
            let grow = &mut grads.cls_weight[k * c..(k + 1) * c];
            let yk = cache.y[i * w + k];
            let mut acc = 0.0;
            for j in 0..c {
                grow[j] += yk * gl[j];
                acc += row[j] * gl[j];
            }
            gy[k] = if cache.keep.is_empty() { acc } else { acc * cache.keep[i * w + k] };
        }
        let zn = &cache.zn[i * w..(i + 1) * w];
        for k in 0..w {
            grads.norm_scale[k] += gy[k] * zn[k];
            grads.norm_shift[k] += gy[k];
            gzn[k] = gy[k] * params.norm_scale[k];
        }
        // layer-norm reverse: inv·(g − mean(g) − zn·mean(g·zn))
        let mg = gzn.iter().sum::<f64>() / w as f64;
        let mgz = gzn.iter().zip(zn).map(|(a, b)| a * b).sum::<f64>() / w as f64;
        let inv = cache.inv_std[i];
        let (hr, hi) = g_h.row_mut(i);
        for k in 0..d {
            hr[k] = inv * (gzn[k] - mg - zn[k] * mgz);
            hi[k] = inv * (gzn[d + k] - mg - zn[d + k] * mgz);
        }
    }
    g_h
}

/// One forward pass worth of reverse state.
#[derive(Debug, Clone)]
pub struct PassTape {
    layers: Vec<LayerCache>,
    readout: ReadoutCache,
    /// Per-edge keep mask of this pass, if any.
    pub edge_mask: Option<Vec<bool>>,
}

fn run_layers(params: &ModelParams, graph: &Graph, h0: ComplexMatrix, mask: Option<&[bool]>) -> Result<(ComplexMatrix, Vec<LayerCache>)> {
    let mut h = h0;
    let mut caches = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (out, cache) = layer_forward(layer, &params.config, graph, &h, mask)?;
        caches.push(cache);
        h = out;
    }
    Ok((h, caches))
}

fn lift(params: &ModelParams, data: &Dataset) -> Result<ComplexMatrix> {
    params.check_dataset(data)?;
    complex_lift(&data.features, data.feature_dim, &params.lift_re, &params.lift_im, params.hidden_dim())
}

fn forward_from(
    params: &ModelParams,
    data: &Dataset,
    h0: ComplexMatrix,
    mask: Option<Vec<bool>>,
    dropout: Option<&mut ChaCha8Rng>,
) -> Result<(Vec<f64>, PassTape)> {
    let (h, layers) = run_layers(params, &data.graph, h0, mask.as_deref())?;
    let (logits, readout) = readout(params, &h, dropout.map(|r| (params.config.dropout, r)));
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(GescError::NonFinite { stage: "readout logits" });
    }
    Ok((
        logits,
        PassTape {
            layers,
            readout,
            edge_mask: mask,
        },
    ))
}

/// One forward pass. `edge_mask` keeps a subset of edges for every layer;
/// `dropout` is applied at the readout only when `training` is set.
pub fn model_forward(
    params: &ModelParams,
    data: &Dataset,
    edge_mask: Option<Vec<bool>>,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, PassTape)> {
    let h0 = lift(params, data)?;
    forward_from(params, data, h0, edge_mask, training.then_some(rng))
}

/// Inference logits (`N × C`, row-major) on the full graph.
pub fn predict(params: &ModelParams, data: &Dataset) -> Result<Vec<f64>> {
    let h0 = lift(params, data)?;
    let (h, _) = run_layers(params, &data.graph, h0, None)?;
    Ok(readout(params, &h, None).0)
}

/// Hidden states `H⁽⁰⁾ … H⁽ᴸ⁾` on the given edge subset.
pub fn hidden_states(params: &ModelParams, data: &Dataset, mask: Option<&[bool]>) -> Result<Vec<ComplexMatrix>> {
    let mut states = vec![lift(params, data)?];
    for layer in &params.layers {
        let (out, _) = layer_forward(layer, &params.config, &data.graph, states.last().unwrap(), mask)?;
        states.push(out);
    }
    Ok(states)
}

/// Readout logits for explicit final hidden states (no dropout).
pub fn readout_logits(params: &ModelParams, h: &ComplexMatrix) -> Vec<f64> {
    readout(params, h, None).0
}

fn log_softmax_row(row: &[f64], out: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(row.iter().map(|v| libm::exp(v - max)).sum::<f64>());
    for (o, v) in out.iter_mut().zip(row) {
        *o = v - lse;
    }
}

/// Mean negative log-likelihood over the masked nodes, and its gradient
/// with respect to the logits.
pub fn cross_entropy(logits: &[f64], labels: &[usize], mask: &[bool], num_classes: usize) -> Result<(f64, Vec<f64>)> {
    let count = mask.iter().filter(|m| **m).count();
    if count == 0 {
        return Err(GescError::EmptyMask);
    }
    let c = num_classes;
    let mut grad = vec![0.0; logits.len()];
    let mut lp = vec![0.0; c];
    let mut total = 0.0;
    for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        log_softmax_row(&logits[i * c..(i + 1) * c], &mut lp);
        total -= lp[labels[i]];
        let g = &mut grad[i * c..(i + 1) * c];
        for k in 0..c {
            g[k] = libm::exp(lp[k]) / count as f64;
        }
        g[labels[i]] -= 1.0 / count as f64;
    }
    Ok((total / count as f64, grad))
}

/// Mean Jensen–Shannon divergence between `softmax(l1/T)` and
/// `softmax(l2/T)` over all rows, with gradients for both inputs.
pub fn js_consistency(l1: &[f64], l2: &[f64], num_classes: usize, temperature: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if l1.len() != l2.len() {
        return Err(GescError::Dimension {
            what: "logit matrix",
            expected: l1.len(),
            found: l2.len(),
        });
    }
    if !(temperature > 0.0) {
        return Err(GescError::Parameter("temperature T must be positive"));
    }
    let c = num_classes;
    let n = l1.len() / c;
    if n == 0 {
        return Ok((0.0, vec![], vec![]));
    }
    let mut g1 = vec![0.0; l1.len()];
    let mut g2 = vec![0.0; l2.len()];
    let (mut lp, mut lq) = (vec![0.0; c], vec![0.0; c]);
    let scaled = |row: &[f64]| row.iter().map(|v| v / temperature).collect::<Vec<_>>();
    let mut total = 0.0;
    for i in 0..n {
        log_softmax_row(&scaled(&l1[i * c..(i + 1) * c]), &mut lp);
        log_softmax_row(&scaled(&l2[i * c..(i + 1) * c]), &mut lq);
        let p: Vec<f64> = lp.iter().map(|v| libm::exp(*v)).collect();
        let q: Vec<f64> = lq.iter().map(|v| libm::exp(*v)).collect();
        let mut js = 0.0;
        // dJS/dp_k = ½ ln(p_k/m_k); terms with p_k = 0 vanish in the softmax Jacobian
        let mut gp = vec![0.0; c];
        let mut gq = vec![0.0; c];
        for k in 0..c {
            let m = 0.5 * (p[k] + q[k]);
            if m <= 0.0 {
                continue;
            }
            let lm = libm::log(m);
            if p[k] > 0.0 {
                js += 0.5 * p[k] * (lp[k] - lm);
                gp[k] = 0.5 * (lp[k] - lm);
            }
            if q[k] > 0.0 {
                js += 0.5 * q[k] * (lq[k] - lm);
                gq[k] = 0.5 * (lq[k] - lm);
            }
        }
        total += js;
        for (probs, gprob, out) in [(&p, &gp, &mut g1[i * c..(i + 1) * c]), (&q, &gq, &mut g2[i * c..(i + 1) * c])] {
            let dot: f64 = probs.iter().zip(gprob).map(|(a, b)| a * b).sum();
            for k in 0..c {
                out[k] = probs[k] * (gprob[k] - dot) / (temperature * n as f64);
            }
        }
    }
    Ok((total / n as f64, g1, g2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub ce: f64,
    pub js: f64,
}

/// Reverse state of a whole training step. Single use.
#[derive(Debug)]
pub struct Tape {
    passes: Vec<(PassTape, Vec<f64>)>,
    consumed: bool,
}

impl Tape {
    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    pub fn passes(&self) -> impl Iterator<Item = &PassTape> {
        self.passes.iter().map(|(p, _)| p)
    }
}

/// `L_CE + λ_JS · L_JS`. The cross-entropy pass runs on the full graph
/// (unless `ce_edge_drop`) with readout dropout; the two consistency
/// passes each draw their own edge mask. With `λ_JS = 0` the consistency
/// passes are skipped and `js` is reported as 0.
pub fn total_loss(params: &ModelParams, data: &Dataset, train: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<(LossBreakdown, Tape)> {
    let h0 = lift(params, data)?;
    let c = params.num_classes;
    let ce_mask = if train.ce_edge_drop {
        Some(sample_edge_drop_mask(&data.graph, train.p_edge_drop, rng)?)
    } else {
        None
    };
    let (logits, tape_ce) = forward_from(params, data, h0.clone(), ce_mask, Some(rng))?;
    let (ce, g_ce) = cross_entropy(&logits, &data.labels, &data.splits.train, c)?;
    let mut passes = vec![(tape_ce, g_ce)];
    let mut js = 0.0;
    if train.lambda_js > 0.0 {
        let m1 = sample_edge_drop_mask(&data.graph, train.p_edge_drop, rng)?;
        let (l1, t1) = forward_from(params, data, h0.clone(), Some(m1), Some(rng))?;
        let m2 = sample_edge_drop_mask(&data.graph, train.p_edge_drop, rng)?;
        let (l2, t2) = forward_from(params, data, h0, Some(m2), Some(rng))?;
        let (value, mut g1, mut g2) = js_consistency(&l1, &l2, c, train.temperature)?;
        js = value;
        for g in g1.iter_mut().chain(g2.iter_mut()) {
            *g *= train.lambda_js;
        }
        passes.push((t1, g1));
        passes.push((t2, g2));
    }
    let total = ce + train.lambda_js * js;
    if !total.is_finite() {
        return Err(GescError::NonFinite { stage: "loss" });
    }
    Ok((LossBreakdown { total, ce, js }, Tape { passes, consumed: false }))
}

/// Reverse accumulation over every pass recorded on `tape`.
pub fn backward(params: &ModelParams, data: &Dataset, tape: &mut Tape) -> Result<ModelParams> {
    if tape.consumed {
        return Err(GescError::TapeConsumed);
    }
    tape.consumed = true;
    let mut grads = params.zeros_like();
    let d = params.hidden_dim();
    let mut g_h0 = ComplexMatrix::zeros(data.num_nodes(), d);
    for (pass, g_logits) in &tape.passes {
        let mut g = readout_backward(params, &pass.readout, g_logits, &mut grads);
        for (l, cache) in pass.layers.iter().enumerate().rev() {
            g = layer_backward(&params.layers[l], &params.config, &data.graph, cache, &g, &mut grads.layers[l])?;
        }
        let (ar, ai) = g_h0.parts_mut();
        let (gr, gi) = (g.re(), g.im());
        for k in 0..ar.len() {
            ar[k] += gr[k];
            ai[k] += gi[k];
        }
    }
    lift_backward(&data.features, data.feature_dim, d, &g_h0, &mut grads.lift_re, &mut grads.lift_im);
    if !grads.is_finite() {
        return Err(GescError::NonFinite { stage: "gradients" });
    }
    Ok(grads)
}

/// Argmax class per row; ties go to the lowest class index.
pub fn predictions(logits: &[f64], num_classes: usize) -> Vec<usize> {
    logits
        .chunks(num_classes)
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(logits: &[f64], labels: &[usize], mask: &[bool], num_classes: usize) -> Result<f64> {
    let count = mask.iter().filter(|m| **m).count();
    if count == 0 {
        return Err(GescError::EmptyMask);
    }
    let pred = predictions(logits, num_classes);
    let hits = mask.iter().enumerate().filter(|(i, m)| **m && pred[*i] == labels[*i]).count();
    Ok(hits as f64 / count as f64)
}

/// Accuracy of the inference pass on the masked nodes.
pub fn evaluate(params: &ModelParams, data: &Dataset, mask: &[bool]) -> Result<f64> {
    if !mask.iter().any(|m| *m) {
        return Err(GescError::EmptyMask);
    }
    accuracy(&predict(params, data)?, &data.labels, mask, params.num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_examples() {
        let h = complex_lift(&[2.0], 1, &[0.5], &[-0.25], 1).unwrap();
        assert_eq!(h.get(0, 0), crate::C64::new(1.0, -0.5));
        let h = complex_lift(&[0.0, 0.0], 2, &[1.0, 2.0], &[3.0, 4.0], 1).unwrap();
        assert_eq!(h.frobenius_norm(), 0.0);
        let h = complex_lift(&[1.0, -1.0], 2, &[1.0, 2.0], &[0.0, 0.0], 1).unwrap();
        assert_eq!(h.im(), &[0.0]);
    }

    #[test]
    fn cross_entropy_examples() {
        let (l, _) = cross_entropy(&[0.0; 3], &[1], &[true], 3).unwrap();
        assert!((l - libm::log(3.0)).abs() < 1e-15);
        let (l, _) = cross_entropy(&[0.0, libm::log(3.0)], &[1], &[true], 2).unwrap();
        // p = 3/4
        assert!((l + libm::log(0.75)).abs() < 1e-15);
        assert!((l - 0.2877).abs() < 1e-4);
        let (l, _) = cross_entropy(&[0.0, 800.0], &[1], &[true], 2).unwrap();
        assert!(l < 1e-300);
        assert!(matches!(cross_entropy(&[0.0, 0.0], &[0], &[false], 2), Err(GescError::EmptyMask)));
    }

    #[test]
    fn js_examples() {
        let a = [0.3, -1.0, 2.0, 0.5];
        assert!(js_consistency(&a, &a, 2, 1.0).unwrap().0.abs() < 1e-15);
        let (v, _, _) = js_consistency(&[800.0, 0.0], &[0.0, 800.0], 2, 1.0).unwrap();
        assert!((v - libm::log(2.0)).abs() < 1e-6);
        let b = [1.0, 0.2, -0.4, 0.9];
        assert_eq!(js_consistency(&a, &b, 2, 0.7).unwrap().0, js_consistency(&b, &a, 2, 0.7).unwrap().0);
    }

    #[test]
    fn js_gradient_matches_finite_differences() {
        let a = [0.3, -1.0, 2.0, 0.5, 0.1, 0.0];
        let b = [1.0, 0.2, -0.4, 0.9, -0.3, 0.6];
        let (_, g1, g2) = js_consistency(&a, &b, 3, 0.8).unwrap();
        let h = 1e-6;
        for k in 0..6 {
            let mut ap = a;
            let mut am = a;
            ap[k] += h;
            am[k] -= h;
            let fd = (js_consistency(&ap, &b, 3, 0.8).unwrap().0 - js_consistency(&am, &b, 3, 0.8).unwrap().0) / (2.0 * h);
            assert!((fd - g1[k]).abs() < 1e-8);
            let mut bp = b;
            let mut bm = b;
            bp[k] += h;
            bm[k] -= h;
            let fd = (js_consistency(&a, &bp, 3, 0.8).unwrap().0 - js_consistency(&a, &bm, 3, 0.8).unwrap().0) / (2.0 * h);
            assert!((fd - g2[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn accuracy_tie_rule() {
        let logits = [0.0; 8];
        let acc = accuracy(&logits, &[0, 1, 0, 1], &[true; 4], 2).unwrap();
        assert_eq!(acc, 0.5);
        assert_eq!(predictions(&logits, 2), vec![0; 4]);
        assert_eq!(accuracy(&[1.0, 0.0, 0.0, 1.0], &[0, 1], &[true; 2], 2).unwrap(), 1.0);
        assert_eq!(accuracy(&[1.0, 0.0, 0.0, 1.0], &[1, 0], &[true; 2], 2).unwrap(), 0.0);
    }
}
