//! Aggregation, self-component and Lipschitz bounds on random layers.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::complex::{self, kernels, ComplexMatrix, ComplexVector, ProjectorHandle, C64};
use crate::config::{AttentionMode, Gating, ModelConfig, ParamMode, SicPosition};
use crate::graph::Graph;
use crate::layer::{layer_probe, post_gate_message, transport, HeadTransform, LayerParams, LayerProbe};
use crate::rng::{stream, trial_rng, ChaCha8Rng};

/// Two-sided estimate of a spectral norm: `lower` from 50 power
/// iterations on `A^H A`, `upper` from the trace bound
/// `λ_max(B) ≤ tr(B^k)^{1/k}` with `k = 2^10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralNorm {
    pub lower: f64,
    pub upper: f64,
}

pub const POWER_ITERATIONS: usize = 50;
const SQUARINGS: u32 = 10;

pub fn spectral_norm_bounds(a: &ComplexMatrix) -> SpectralNorm {
    let (rows, cols) = (a.rows(), a.cols());
    let m = DMatrix::from_fn(rows, cols, |r, c| a.get(r, c));
    let b = m.adjoint() * &m;
    let scale = b.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return SpectralNorm { lower: 0.0, upper: 0.0 };
    }

    let mut v = nalgebra::DVector::from_fn(cols, |k, _| C64::new(1.0, 0.1 * k as f64));
    for _ in 0..POWER_ITERATIONS {
        let w = &b * &v;
        let n = w.norm();
        if n == 0.0 {
            break;
        }
        v = w / C64::new(n, 0.0);
    }
    v /= C64::new(v.norm(), 0.0);
    let lower = (&m * &v).norm();

    // log K tracks the scalar divided out at each squaring
    let mut c = &b / C64::new(scale, 0.0);
    let mut log_k = libm::log(scale);
    for _ in 0..SQUARINGS {
        let sq = &c * &c;
        let tr = sq.trace().re;
        if !(tr > 0.0) {
            break;
        }
        c = sq / C64::new(tr, 0.0);
        log_k = libm::log(tr) + 2.0 * log_k;
    }
    let k = f64::from(1u32 << SQUARINGS);
    let tail = libm::log(c.trace().re.max(f64::MIN_POSITIVE));
    let upper = libm::sqrt(libm::exp((log_k + tail) / k)).max(lower);
    SpectralNorm { lower, upper }
}

/// A random layer with states, used by the bound checkers.
#[derive(Debug, Clone)]
pub struct LayerInstance {
    pub cfg: ModelConfig,
    pub params: LayerParams,
    pub graph: Graph,
    pub states: ComplexMatrix,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random small graph, width, head count, attention mode, SIC setting and
/// gate parameters; W and Q get a random overall scale.
pub fn random_layer_instance(rng: &mut ChaCha8Rng) -> LayerInstance {
    let n = rng.random_range(2..=12);
    let d = rng.random_range(1..=6);
    let p = rng.random_range(0.2..0.7);
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    let graph = Graph::new(n, &pairs).expect("generated pairs are simple");
    let modes = [AttentionMode::Hybrid, AttentionMode::PhaseAided, AttentionMode::PhaseNorm];
    let cfg = ModelConfig {
        hidden_dim: d,
        heads: rng.random_range(1..=3),
        layers: 1,
        eta_sic: rng.random_range(0.0..=1.0),
        attention_mode: modes[rng.random_range(0..3)],
        lambda_mix: rng.random_range(0.0..=1.0),
        kappa: rng.random_range(0.0..2.0),
        delta: rng.random_range(0.1..2.0),
        param_mode: if rng.random::<f64>() < 0.7 { ParamMode::Full } else { ParamMode::Diagonal },
        gating: if rng.random::<f64>() < 0.85 { Gating::Learned } else { Gating::Additive },
        sic_position: if rng.random::<f64>() < 0.7 { SicPosition::Pre } else { SicPosition::Post },
        ..ModelConfig::default()
    };
    let mut params = LayerParams::init(&cfg, graph.num_edges(), rng);
    let pi = core::f64::consts::PI;
    for t in &mut params.theta {
        *t = rng.random_range(-pi..pi);
    }
    for b in &mut params.modrelu_bias {
        *b = rng.random_range(-0.5..0.1);
    }
    for h in &mut params.heads {
        let gain: f64 = rng.random_range(0.2..3.0);
        match &mut h.transform {
            HeadTransform::Full { w, q } => {
                for v in w.re_mut().iter_mut().chain(q.re_mut().iter_mut()) {
                    *v *= gain;
                }
                for v in w.im_mut().iter_mut().chain(q.im_mut().iter_mut()) {
                    *v *= gain;
                }
            }
            HeadTransform::Diagonal(t) => {
                for r in t.r_w.iter_mut().chain(t.r_q.iter_mut()) {
                    *r = gain * rng.random_range(0.0..1.5);
                }
            }
        }
        h.sign_scale = rng.random_range(-2.0..2.0);
        h.sign_shift = rng.random_range(-1.0..1.0);
        for a in &mut h.mix_weights {
            *a = rng.random_range(-1.0..1.0);
        }
        h.mix_bias = rng.random_range(-1.0..1.0);
        h.log_gamma = rng.random_range(-1.0..1.0);
    }
    let mag = libm::pow(10.0, rng.random_range(-2.0..1.0));
    let re = (0..n * d).map(|_| mag * normal(rng)).collect();
    let im = (0..n * d).map(|_| mag * normal(rng)).collect();
    let states = ComplexMatrix::from_parts(n, d, re, im).expect("shape");
    LayerInstance { cfg, params, graph, states }
}

fn w_norms(params: &LayerParams) -> Vec<SpectralNorm> {
    params.heads.iter().map(|h| spectral_norm_bounds(&h.transform.dense_w())).collect()
}

fn row_norm(h: &ComplexMatrix, i: usize) -> f64 {
    let (r, im) = h.row(i);
    kernels::norm(r, im)
}

/// `‖Σ_j α m̂‖ ≤ ‖W‖₂ · max_j ‖h_j‖` per head and node, with the
/// certified upper estimate of `‖W‖₂`.
pub fn check_perhead_bound(trials: usize, seed: u64) -> VerificationReport {
    let mut worst = f64::NEG_INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut checked = 0usize;
    for t in 0..trials {
        let mut rng = trial_rng(seed, stream::VERIFY, t as u64);
        let inst = random_layer_instance(&mut rng);
        let probe = layer_probe(&inst.params, &inst.cfg, &inst.graph, &inst.states, None).expect("valid instance");
        let norms = w_norms(&inst.params);
        for (m, agg) in probe.head_aggregates.iter().enumerate() {
            for i in 0..inst.graph.num_nodes() {
                let arcs = inst.graph.in_arcs(i);
                if arcs.is_empty() {
                    continue;
                }
                let max_h = arcs.iter().map(|a| row_norm(&inst.states, a.source)).fold(0.0, f64::max);
                let bound = norms[m].upper * max_h;
                let measured = row_norm(agg, i);
                worst = worst.max(measured - bound);
                if bound > 0.0 {
                    max_ratio = max_ratio.max(measured / bound);
                }
                checked += 1;
            }
        }
    }
    VerificationReport::new("bounds/per_head_aggregation", trials, worst.max(0.0), 1e-9)
        .with("max_ratio", max_ratio)
        .with("node_heads_checked", checked as f64)
        .with("largest_slack_violation", worst)
}

/// `‖Π(h_i)·pre_i‖ ≤ ‖Π(h_i)h_i‖ + Σ_m Σ_j α ‖Π(h_i) h̃_j‖` for the
/// rank-1 projector.
pub fn check_self_component(trials: usize, seed: u64) -> VerificationReport {
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trials {
        let mut rng = trial_rng(seed, stream::VERIFY, (t as u64) | (1 << 40));
        let inst = random_layer_instance(&mut rng);
        let probe = layer_probe(&inst.params, &inst.cfg, &inst.graph, &inst.states, None).expect("valid instance");
        let eps = inst.cfg.epsilon;
        let mut rhs = vec![0.0; inst.graph.num_nodes()];
        for tr in &probe.arcs {
            let arc = &inst.graph.arcs()[tr.arc];
            let h_j = inst.states.row_vector(arc.source);
            let ht = transport(&inst.params, tr.head, arc, &h_j).expect("shape");
            rhs[tr.target] += tr.alpha * par_norm(&inst.states, tr.target, &ht, eps);
        }
        for i in 0..inst.graph.num_nodes() {
            let own = par_norm(&inst.states, i, &inst.states.row_vector(i), eps);
            let lhs = par_norm(&inst.states, i, &probe.pre_norm.row_vector(i), eps);
            worst = worst.max(lhs - own - rhs[i]);
        }
    }
    VerificationReport::new("bounds/self_component", trials, worst.max(0.0), 1e-9).with("largest_slack_violation", worst)
}

/// Random single cancellations `x ↦ x − η Π_ε(h) x`: the energy along
/// `h` never grows and the part orthogonal to `h` is untouched. Returns
/// `(energy, orthogonal)` reports at tolerance 1e-12.
pub fn check_sic_projector(trials: usize, seed: u64) -> (VerificationReport, VerificationReport) {
    let mut rng = trial_rng(seed, stream::VERIFY, 3 << 40);
    let mut energy_worst = f64::NEG_INFINITY;
    let mut orth_worst: f64 = 0.0;
    for _ in 0..trials {
        let d = rng.random_range(1..=8);
        let scale_h = libm::pow(10.0, rng.random_range(-1.0..1.0));
        let scale_x = libm::pow(10.0, rng.random_range(-1.0..1.0));
        let mut draw = |s: f64| -> ComplexVector {
            let re = (0..d).map(|_| s * normal(&mut rng)).collect();
            let im = (0..d).map(|_| s * normal(&mut rng)).collect();
            ComplexVector::new(re, im).expect("equal lengths")
        };
        let h = draw(scale_h);
        let x = draw(scale_x);
        let eta = rng.random_range(0.0..=1.0);
        let eps = libm::pow(10.0, rng.random_range(-8.0..0.0));
        let p = ProjectorHandle::new(h.clone(), eps).expect("epsilon > 0");
        let r = complex::sic_apply(&p, eta, &x).expect("eta in range");

        let hn = complex::norm2(&h);
        let unit = h.scale(C64::new(1.0 / hn, 0.0));
        let along = |v: &ComplexVector| complex::inner_product(&unit, v).expect("same length");
        let (ax, ar) = (along(&x), along(&r));
        let xx = complex::norm2(&x);
        let m = xx.max(1.0);
        energy_worst = energy_worst.max((ar.norm_sqr() - ax.norm_sqr()) / (m * m));
        let perp = |v: &ComplexVector, a: C64| v.sub(&unit.scale(a)).expect("same length");
        let moved = perp(&r, ar).max_abs_diff(&perp(&x, ax)) / xx.max(1.0);
        orth_worst = orth_worst.max(moved);
    }
    (
        VerificationReport::new("sic/self_energy", trials, energy_worst.max(0.0), 1e-12).with("largest_slack_violation", energy_worst),
        VerificationReport::new("sic/orthogonal_preserved", trials, orth_worst, 1e-12),
    )
}

/// `‖Π_ε(h_i) x‖ = |⟨h_i, x⟩|·‖h_i‖/(‖h_i‖² + ε)`.
fn par_norm(h: &ComplexMatrix, i: usize, x: &ComplexVector, eps: f64) -> f64 {
    let (hr, hi) = h.row(i);
    let sq = kernels::sqnorm(hr, hi);
    kernels::dot(hr, hi, x.re(), x.im()).norm() * libm::sqrt(sq) / (sq + eps)
}

/// Analytic and sampled Lipschitz constants of `h ↦ h + Σ_m Σ_j α m̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub max_in_degree: usize,
    pub w_norm_upper: Vec<f64>,
    /// `1 + Σ_m Δ ‖W_m‖₂` (attention weights bounded by 1).
    pub analytic: f64,
    pub alpha_max_observed: f64,
    /// Same bound with the largest attention weight actually seen.
    pub analytic_posthoc: f64,
    /// Largest sampled ratio of the linear-path map: attention weights,
    /// gates and the cancellation anchor held at the base point.
    pub empirical: f64,
    /// Largest sampled ratio of the map with every coefficient recomputed.
    pub empirical_nonlinear: f64,
}

fn pre_norm(inst: &LayerInstance, h: &ComplexMatrix) -> (ComplexMatrix, f64) {
    let probe = layer_probe(&inst.params, &inst.cfg, &inst.graph, h, None).expect("valid instance");
    let amax = probe.arcs.iter().map(|a| a.alpha).fold(0.0, f64::max);
    (probe.pre_norm, amax)
}

/// `y ↦ y + Σ_m Σ_j α m̂(y)` with α, ξ, g and the projector anchors taken
/// from `base`. Linear in `y`.
fn linear_path(inst: &LayerInstance, base: &LayerProbe, y: &ComplexMatrix) -> ComplexMatrix {
    let cfg = &inst.cfg;
    let mut out = y.clone();
    for tr in &base.arcs {
        let arc = &inst.graph.arcs()[tr.arc];
        let ht = transport(&inst.params, tr.head, arc, &y.row_vector(arc.source)).expect("shape");
        let anchor = ProjectorHandle::new(inst.states.row_vector(tr.target), cfg.epsilon).expect("epsilon > 0");
        let msg = match cfg.sic_position {
            SicPosition::Pre => {
                let r = complex::sic_apply(&anchor, cfg.eta_sic, &ht).expect("eta in range");
                post_gate_message(tr.xi, tr.gate, &r, &ht).expect("shape")
            }
            SicPosition::Post => {
                let m = post_gate_message(tr.xi, tr.gate, &ht, &ht).expect("shape");
                complex::sic_apply(&anchor, cfg.eta_sic, &m).expect("eta in range")
            }
        };
        let (r, im) = out.row_mut(tr.target);
        kernels::axpy(C64::new(tr.alpha, 0.0), msg.re(), msg.im(), r, im);
    }
    out
}

fn perturbed(h: &ComplexMatrix, rng: &mut ChaCha8Rng, directional: bool) -> ComplexMatrix {
    let (n, d) = (h.rows(), h.cols());
    let mut out = h.clone();
    let rms = h.frobenius_norm() / libm::sqrt((n * d) as f64);
    if directional {
        for i in 0..n {
            let t = C64::new(normal(rng), normal(rng)) * libm::pow(10.0, rng.random_range(-3.0..-1.0));
            let (r, im) = out.row_mut(i);
            let (hr, hi) = h.row(i);
            kernels::axpy(t, hr, hi, r, im);
        }
    } else {
        let step = rms * libm::pow(10.0, rng.random_range(-3.0..0.0));
        let (r, im) = out.parts_mut();
        for k in 0..n * d {
            r[k] += step * normal(rng);
            im[k] += step * normal(rng);
        }
    }
    out
}

/// Largest sampled ratios `(linear path, nonlinear)` over `pairs`
/// perturbations of the instance's states.
fn sample_ratios(inst: &LayerInstance, base: &LayerProbe, pairs: usize, directional: bool, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let lin_x = linear_path(inst, base, &inst.states);
    let mut lin: f64 = 0.0;
    let mut full: f64 = 0.0;
    let mut alpha_max = base.arcs.iter().map(|a| a.alpha).fold(0.0, f64::max);
    for _ in 0..pairs {
        let y = perturbed(&inst.states, rng, directional);
        let dist = y.frobenius_distance(&inst.states);
        if dist == 0.0 {
            continue;
        }
        lin = lin.max(linear_path(inst, base, &y).frobenius_distance(&lin_x) / dist);
        let (fy, a) = pre_norm(inst, &y);
        alpha_max = alpha_max.max(a);
        full = full.max(fy.frobenius_distance(&base.pre_norm) / dist);
    }
    (lin, full, alpha_max)
}

/// Samples `pairs` perturbations of the instance's states.
pub fn check_lipschitz(inst: &LayerInstance, pairs: usize, rng: &mut ChaCha8Rng) -> LipschitzEstimate {
    let delta = inst.graph.max_degree();
    let norms: Vec<f64> = w_norms(&inst.params).iter().map(|s| s.upper).collect();
    let base = layer_probe(&inst.params, &inst.cfg, &inst.graph, &inst.states, None).expect("valid instance");
    let (empirical, empirical_nonlinear, alpha_max) = sample_ratios(inst, &base, pairs, false, rng);
    let sum_w: f64 = norms.iter().sum();
    LipschitzEstimate {
        max_in_degree: delta,
        analytic: 1.0 + delta as f64 * sum_w,
        alpha_max_observed: alpha_max,
        analytic_posthoc: 1.0 + alpha_max * delta as f64 * sum_w,
        w_norm_upper: norms,
        empirical,
        empirical_nonlinear,
    }
}

/// Lipschitz checks on `trials` random layers with `pairs` perturbations
/// each. Returns the global report and the self-aligned directional one,
/// whose bound uses the gate and SIC floors measured on each instance.
/// Pass/fail is decided on the linear-path map; the fully recomputed map
/// is reported alongside (`nonlinear_*` metrics).
pub fn check_directional_lipschitz(trials: usize, pairs: usize, seed: u64) -> (VerificationReport, VerificationReport) {
    let mut worst = [f64::NEG_INFINITY; 2];
    let mut ratio = [0.0f64; 2];
    let mut nl_ratio = [0.0f64; 2];
    let mut nl_violations = [0usize; 2];
    for t in 0..trials {
        let mut rng = trial_rng(seed, stream::VERIFY, (t as u64) | (2 << 40));
        let inst = random_layer_instance(&mut rng);
        let est = check_lipschitz(&inst, pairs, &mut rng);
        worst[0] = worst[0].max(est.empirical - est.analytic);
        ratio[0] = ratio[0].max(est.empirical / est.analytic);
        nl_ratio[0] = nl_ratio[0].max(est.empirical_nonlinear / est.analytic);
        nl_violations[0] += usize::from(est.empirical_nonlinear > est.analytic + 1e-9);

        // floors of the applied gates and SIC strength at the base point
        let base = layer_probe(&inst.params, &inst.cfg, &inst.graph, &inst.states, None).expect("valid instance");
        let g_min = base.arcs.iter().map(|a| a.gate).fold(1.0, f64::min);
        let xi_min = base.arcs.iter().map(|a| a.xi).fold(1.0, f64::min);
        let lambda_min = (0..inst.graph.num_nodes())
            .map(|i| {
                let r = row_norm(&inst.states, i);
                r * r / (r * r + inst.cfg.epsilon)
            })
            .fold(1.0, f64::min);
        let factor = 1.0 - g_min * xi_min * inst.cfg.eta_sic * lambda_min;
        let tightened = 1.0 + est.max_in_degree as f64 * factor * est.w_norm_upper.iter().sum::<f64>();
        let (lin, full, _) = sample_ratios(&inst, &base, pairs, true, &mut rng);
        worst[1] = worst[1].max(lin - tightened);
        ratio[1] = ratio[1].max(lin / tightened);
        nl_ratio[1] = nl_ratio[1].max(full / tightened);
        nl_violations[1] += usize::from(full > tightened + 1e-9);
    }
    let report = |k: usize, name: &str| {
        VerificationReport::new(name, trials, worst[k].max(0.0), 1e-9)
            .with("max_empirical_over_bound", ratio[k])
            .with("largest_slack_violation", worst[k])
            .with("nonlinear_max_empirical_over_bound", nl_ratio[k])
            .with("nonlinear_violations", nl_violations[k] as f64)
    };
    (report(0, "bounds/lipschitz"), report(1, "bounds/lipschitz_directional"))
}
