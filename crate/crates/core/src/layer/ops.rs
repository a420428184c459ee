//! Per-arc and per-node building blocks of a layer.
//!
//! The `ComplexVector` functions are the readable reference surface; the
//! `*_slices` / `*_backward` variants are what the layer kernels run.

use alloc::vec;
use alloc::vec::Vec;

use crate::complex::{self, kernels, ComplexVector, ProjectorHandle, C64};
use crate::config::{AttentionMode, ModelConfig};
use crate::error::{GescError, Result};
use crate::graph::Arc;

use super::params::{LayerParams, Which};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Unit-modulus transport factor of an arc: `e^{i·orientation·θ_edge}`.
#[inline]
pub fn arc_phase(theta: &[f64], arc: &Arc) -> C64 {
    C64::from_polar(1.0, arc.sign() * theta[arc.edge])
}

/// `h̃_{j→i} = U_ji W h_j`.
pub fn transport(params: &LayerParams, head: usize, arc: &Arc, h_j: &ComplexVector) -> Result<ComplexVector> {
    let d = params.hidden_dim();
    if h_j.len() != d {
        return Err(GescError::Dimension {
            what: "source state",
            expected: d,
            found: h_j.len(),
        });
    }
    let mut out = ComplexVector::zeros(d);
    let (or, oi) = out.parts_mut();
    params.heads[head].transform.apply(Which::W, h_j.re(), h_j.im(), or, oi);
    Ok(out.scale(arc_phase(&params.theta, arc)))
}

/// `r = h̃ − η Π_ε(h_i) h̃`.
pub fn sic_residual(cfg: &ModelConfig, h_i: &ComplexVector, transported: &ComplexVector) -> Result<ComplexVector> {
    let p = ProjectorHandle::new(h_i.clone(), cfg.epsilon)?;
    complex::sic_apply(&p, cfg.eta_sic, transported)
}

/// Gauge-invariant alignment `ρ = Re(s/ν)` and sign gate `ξ = σ(cρ + d)`.
pub fn sign_gate(params: &LayerParams, head: usize, epsilon: f64, q_hi: &ComplexVector, r: &ComplexVector) -> Result<(f64, f64)> {
    let s = complex::inner_product(q_hi, r)?;
    let nu = complex::norm2(q_hi) * complex::norm2(r) + epsilon;
    let rho = s.re / nu;
    let h = &params.heads[head];
    Ok((rho, sigmoid(h.sign_scale * rho + h.sign_shift)))
}

/// `g = σ(a·[ln(1+‖r̄‖), ln(1+‖h̃‖), ln(1+|s|)] + b)`.
pub fn residual_gate(params: &LayerParams, head: usize, r_bar: &ComplexVector, transported: &ComplexVector, s: C64) -> f64 {
    let h = &params.heads[head];
    let f = [
        libm::log1p(complex::norm2(r_bar)),
        libm::log1p(complex::norm2(transported)),
        libm::log1p(s.norm()),
    ];
    sigmoid(h.mix_weights[0] * f[0] + h.mix_weights[1] * f[1] + h.mix_weights[2] * f[2] + h.mix_bias)
}

/// `m̂ = g·ξ·r + (1−g)·h̃`.
pub fn post_gate_message(xi: f64, g: f64, r: &ComplexVector, transported: &ComplexVector) -> Result<ComplexVector> {
    let a = r.scale(C64::new(g * xi, 0.0));
    let b = transported.scale(C64::new(1.0 - g, 0.0));
    a.add(&b)
}

/// Knobs of the attention logit.
#[derive(Debug, Clone, Copy)]
pub struct LogitKnobs {
    pub mode: AttentionMode,
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub sqrt_d: f64,
}

impl LogitKnobs {
    pub fn new(cfg: &ModelConfig, gamma: f64) -> Self {
        Self {
            mode: cfg.attention_mode,
            gamma,
            lambda: cfg.lambda_mix,
            kappa: cfg.kappa,
            delta: cfg.delta,
            epsilon: cfg.epsilon,
            sqrt_d: libm::sqrt(cfg.hidden_dim as f64),
        }
    }
}

/// Attention logit from the post-gate score `s̃ = ⟨Qh_i, m̂⟩`.
pub fn attention_logit(knobs: &LogitKnobs, q_hi: &ComplexVector, message: &ComplexVector) -> Result<f64> {
    let s = complex::inner_product(q_hi, message)?;
    Ok(logit_value(knobs, s, complex::norm2(q_hi), complex::norm2(message)))
}

#[inline]
pub(crate) fn logit_value(k: &LogitKnobs, s: C64, qn: f64, mn: f64) -> f64 {
    let abs = s.norm();
    match k.mode {
        AttentionMode::Hybrid => {
            let nu = qn * mn + k.epsilon;
            k.gamma * (k.lambda * abs / k.sqrt_d + (1.0 - k.lambda) * s.re / nu)
        }
        AttentionMode::PhaseAided => {
            let cos = if abs > 0.0 { s.re / abs } else { 0.0 };
            k.gamma * (abs + k.kappa * cos) / k.sqrt_d
        }
        // cos∠s · min(1, |s|/δ) = Re(s) / max(|s|, δ)
        AttentionMode::PhaseNorm => k.gamma * s.re / abs.max(k.delta),
    }
}

/// Gradients of the logit with respect to `s̃` (complex convention
/// `∂/∂Re + i∂/∂Im`), `‖m̂‖` and `‖Qh_i‖`. The temperature gradient is
/// `g_logit · logit` because γ is stored as its logarithm.
#[inline]
pub(crate) fn logit_backward(k: &LogitKnobs, s: C64, qn: f64, mn: f64, g: f64) -> (C64, f64, f64) {
    let abs = s.norm();
    let unit = if abs > 0.0 { s / abs } else { C64::new(0.0, 0.0) };
    match k.mode {
        AttentionMode::Hybrid => {
            let nu = qn * mn + k.epsilon;
            let g_abs = g * k.gamma * k.lambda / k.sqrt_d;
            let g_re = g * k.gamma * (1.0 - k.lambda) / nu;
            let g_nu = -g * k.gamma * (1.0 - k.lambda) * s.re / (nu * nu);
            (unit * g_abs + g_re, g_nu * qn, g_nu * mn)
        }
        AttentionMode::PhaseAided => {
            if abs == 0.0 {
                return (C64::new(0.0, 0.0), 0.0, 0.0);
            }
            let scale = g * k.gamma / k.sqrt_d;
            // d|s| → unit; d(Re s/|s|) → (1 − Re(s)·s/|s|²)/|s|
            let d_cos = (C64::new(1.0, 0.0) - unit * (s.re / abs)) / abs;
            (unit * scale + d_cos * (scale * k.kappa), 0.0, 0.0)
        }
        AttentionMode::PhaseNorm => {
            if abs < k.delta {
                (C64::new(g * k.gamma / k.delta, 0.0), 0.0, 0.0)
            } else {
                let d_cos = (C64::new(1.0, 0.0) - unit * (s.re / abs)) / abs;
                (d_cos * (g * k.gamma), 0.0, 0.0)
            }
        }
    }
}

/// Max-shifted softmax.
pub fn softmax_attention(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(GescError::Parameter("softmax over an empty neighborhood"));
    }
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    Ok(out)
}

pub(crate) fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = libm::exp(l - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// `(h − μ)/(ς + ε)` with complex mean μ and real deviation ς.
pub fn node_norm(h: &ComplexVector, epsilon: f64) -> ComplexVector {
    let mut out = ComplexVector::zeros(h.len());
    let (or, oi) = out.parts_mut();
    node_norm_slices(h.re(), h.im(), epsilon, or, oi);
    out
}

/// Returns `(μ, ς)`.
pub(crate) fn node_norm_slices(hr: &[f64], hi: &[f64], epsilon: f64, or: &mut [f64], oi: &mut [f64]) -> (C64, f64) {
    let d = hr.len() as f64;
    let mu = C64::new(hr.iter().sum::<f64>() / d, hi.iter().sum::<f64>() / d);
    let mut var = 0.0;
    for k in 0..hr.len() {
        let (a, b) = (hr[k] - mu.re, hi[k] - mu.im);
        var += a * a + b * b;
    }
    let sigma = libm::sqrt(var / d);
    let inv = 1.0 / (sigma + epsilon);
    for k in 0..hr.len() {
        or[k] = (hr[k] - mu.re) * inv;
        oi[k] = (hi[k] - mu.im) * inv;
    }
    (mu, sigma)
}

/// Backward of NodeNorm given its output `nn` and deviation `ς`;
/// writes the input gradient into `gin`.
pub(crate) fn node_norm_backward(
    nn: (&[f64], &[f64]),
    sigma: f64,
    epsilon: f64,
    g: (&[f64], &[f64]),
    gin: (&mut [f64], &mut [f64]),
) {
    let d = nn.0.len();
    let denom = sigma + epsilon;
    // nn = dev/denom, so dev = nn·denom
    let mut g_denom = 0.0;
    for k in 0..d {
        g_denom -= (g.0[k] * nn.0[k] + g.1[k] * nn.1[k]) / denom;
    }
    let sig_coef = if sigma > 0.0 { g_denom / (d as f64 * sigma) } else { 0.0 };
    let mut mean_r = 0.0;
    let mut mean_i = 0.0;
    for k in 0..d {
        let dev_r = nn.0[k] * denom;
        let dev_i = nn.1[k] * denom;
        gin.0[k] = g.0[k] / denom + sig_coef * dev_r;
        gin.1[k] = g.1[k] / denom + sig_coef * dev_i;
        mean_r += gin.0[k];
        mean_i += gin.1[k];
    }
    mean_r /= d as f64;
    mean_i /= d as f64;
    for k in 0..d {
        gin.0[k] -= mean_r;
        gin.1[k] -= mean_i;
    }
}

/// `max(|z|+b, 0)·z/|z|` per entry; zero stays zero.
pub fn mod_relu(h: &ComplexVector, bias: &[f64]) -> Result<ComplexVector> {
    if bias.len() != h.len() {
        return Err(GescError::Dimension {
            what: "modReLU bias",
            expected: h.len(),
            found: bias.len(),
        });
    }
    let mut out = ComplexVector::zeros(h.len());
    let (or, oi) = out.parts_mut();
    mod_relu_slices(h.re(), h.im(), bias, or, oi);
    Ok(out)
}

pub(crate) fn mod_relu_slices(zr: &[f64], zi: &[f64], bias: &[f64], or: &mut [f64], oi: &mut [f64]) {
    for k in 0..zr.len() {
        let a = libm::hypot(zr[k], zi[k]);
        let mag = a + bias[k];
        if a > 0.0 && mag > 0.0 {
            let s = mag / a;
            or[k] = zr[k] * s;
            oi[k] = zi[k] * s;
        } else {
            or[k] = 0.0;
            oi[k] = 0.0;
        }
    }
}

/// Accumulates the bias gradient and writes the input gradient.
pub(crate) fn mod_relu_backward(
    z: (&[f64], &[f64]),
    bias: &[f64],
    g: (&[f64], &[f64]),
    gin: (&mut [f64], &mut [f64]),
    gbias: &mut [f64],
) {
    for k in 0..z.0.len() {
        let zk = C64::new(z.0[k], z.1[k]);
        let a = zk.norm();
        let b = bias[k];
        if a > 0.0 && a + b > 0.0 {
            let gk = C64::new(g.0[k], g.1[k]);
            // out = z + b·z/|z|
            let proj = (gk.conj() * zk).re;
            let gz = gk * (1.0 + b / a) - zk * (b * proj / (a * a * a));
            gin.0[k] = gz.re;
            gin.1[k] = gz.im;
            gbias[k] += proj / a;
        } else {
            gin.0[k] = 0.0;
            gin.1[k] = 0.0;
        }
    }
}

/// Block boundaries of the rank-`r` cancellation: `r` contiguous,
/// balanced coordinate blocks of `h_i`, whose restrictions are mutually
/// orthogonal anchors. Rank 1 is the ordinary rank-1 projector.
#[inline]
pub(crate) fn sic_block(d: usize, rank: usize, b: usize) -> core::ops::Range<usize> {
    (b * d / rank)..((b + 1) * d / rank)
}

/// `out = x − η Σ_b β_b h[b]` with `β_b = ⟨h[b], x[b]⟩/(‖h[b]‖² + ε)`;
/// stores the `β_b` in `coefs`.
pub(crate) fn sic_forward(
    h: (&[f64], &[f64]),
    x: (&[f64], &[f64]),
    eta: f64,
    epsilon: f64,
    rank: usize,
    out: (&mut [f64], &mut [f64]),
    coefs: &mut [C64],
) {
    let d = h.0.len();
    for b in 0..rank {
        let rg = sic_block(d, rank, b);
        let (hr, hi) = (&h.0[rg.clone()], &h.1[rg.clone()]);
        let (xr, xi) = (&x.0[rg.clone()], &x.1[rg.clone()]);
        let beta = kernels::dot(hr, hi, xr, xi) / (kernels::sqnorm(hr, hi) + epsilon);
        coefs[b] = beta;
        let (or, oi) = (&mut out.0[rg.clone()], &mut out.1[rg]);
        or.copy_from_slice(xr);
        oi.copy_from_slice(xi);
        kernels::axpy(-beta * eta, hr, hi, or, oi);
    }
}

/// Backward of [`sic_forward`]: accumulates into `gx` and `gh`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sic_backward(
    h: (&[f64], &[f64]),
    x: (&[f64], &[f64]),
    eta: f64,
    epsilon: f64,
    rank: usize,
    coefs: &[C64],
    g: (&[f64], &[f64]),
    gx: (&mut [f64], &mut [f64]),
    gh: (&mut [f64], &mut [f64]),
) {
    let d = h.0.len();
    for b in 0..rank {
        let rg = sic_block(d, rank, b);
        let (hr, hi) = (&h.0[rg.clone()], &h.1[rg.clone()]);
        let (xr, xi) = (&x.0[rg.clone()], &x.1[rg.clone()]);
        let (g_r, g_i) = (&g.0[rg.clone()], &g.1[rg.clone()]);
        let beta = coefs[b];
        let denom = kernels::sqnorm(hr, hi) + epsilon;
        let c = beta * denom;
        // w = β h with upstream −η g
        let g_beta = -eta * kernels::dot(hr, hi, g_r, g_i);
        let g_c = g_beta / denom;
        let g_denom = -(g_beta.conj() * c).re / (denom * denom);
        let bw = -eta * beta.conj();
        let (gxr, gxi) = (&mut gx.0[rg.clone()], &mut gx.1[rg.clone()]);
        let (ghr, ghi) = (&mut gh.0[rg.clone()], &mut gh.1[rg]);
        for k in 0..hr.len() {
            gxr[k] += g_r[k];
            gxi[k] += g_i[k];
            let gk = C64::new(g_r[k], g_i[k]);
            let hk = C64::new(hr[k], hi[k]);
            let xk = C64::new(xr[k], xi[k]);
            let gh_k = bw * gk + hk * (2.0 * g_denom) + g_c.conj() * xk;
            ghr[k] += gh_k.re;
            ghi[k] += gh_k.im;
            let gx_k = g_c * hk;
            gxr[k] += gx_k.re;
            gxi[k] += gx_k.im;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::layer::params::{HeadParams, HeadTransform};
    use crate::complex::ComplexMatrix;
    use core::f64::consts::PI;

    fn cv(v: &[(f64, f64)]) -> ComplexVector {
        ComplexVector::new(v.iter().map(|z| z.0).collect(), v.iter().map(|z| z.1).collect()).unwrap()
    }

    fn identity_layer(d: usize, theta: f64) -> LayerParams {
        LayerParams {
            heads: alloc::vec![HeadParams {
                transform: HeadTransform::Full {
                    w: ComplexMatrix::identity(d),
                    q: ComplexMatrix::identity(d),
                },
                sign_scale: 1.0,
                sign_shift: 0.0,
                mix_weights: [0.0; 3],
                mix_bias: 0.0,
                log_gamma: 0.0,
            }],
            theta: alloc::vec![theta],
            modrelu_bias: alloc::vec![0.0; d],
        }
    }

    #[test]
    fn transport_examples() {
        let fwd = Arc { source: 0, edge: 0, orientation: 1 };
        let rev = Arc { source: 1, edge: 0, orientation: -1 };
        let h = cv(&[(0.3, -0.2), (1.0, 0.5)]);
        assert_eq!(transport(&identity_layer(2, 0.0), 0, &fwd, &h).unwrap(), h);
        let p = identity_layer(1, PI);
        let out = transport(&p, 0, &fwd, &cv(&[(1.0, 0.0)])).unwrap();
        assert!(out.max_abs_diff(&cv(&[(-1.0, 0.0)])) < 1e-15);
        let p = identity_layer(2, 0.7);
        let a = transport(&p, 0, &fwd, &h).unwrap();
        let b = transport(&p, 0, &rev, &h).unwrap();
        // U_ij = conj(U_ji)
        for k in 0..2 {
            assert!((a.get(k) / h.get(k) - (b.get(k) / h.get(k)).conj()).norm() < 1e-14);
        }
        assert!((complex::norm2(&a) - complex::norm2(&h)).abs() < 1e-14);
    }

    #[test]
    fn sic_residual_examples() {
        let cfg = ModelConfig {
            eta_sic: 0.0,
            ..ModelConfig::default()
        };
        let x = cv(&[(2.0, 1.0), (0.5, 0.0)]);
        assert_eq!(sic_residual(&cfg, &cv(&[(1.0, 0.0), (0.0, 0.0)]), &x).unwrap(), x);
        let cfg = ModelConfig::default();
        let orth = cv(&[(0.0, 0.0), (3.0, -1.0)]);
        assert_eq!(sic_residual(&cfg, &cv(&[(1.0, 0.0), (0.0, 0.0)]), &orth).unwrap(), orth);
        let out = sic_residual(&cfg, &cv(&[(1.0, 0.0), (0.0, 0.0)]), &cv(&[(2.0, 0.0), (0.0, 0.0)])).unwrap();
        // dense oracle: 2 − 0.5·(1/(1+1e-4))·2
        let expected = 2.0 - 0.5 * 2.0 / (1.0 + 1e-4);
        assert!((out.get(0).re - expected).abs() < 1e-14);
        assert!((out.get(0).re - 1.0001).abs() < 1e-4);
    }

    #[test]
    fn sign_gate_examples() {
        let p = identity_layer(2, 0.0);
        let q = cv(&[(1.0, 0.5), (-0.3, 2.0)]);
        let (rho, xi) = sign_gate(&p, 0, 1e-12, &q, &q).unwrap();
        assert!((rho - 1.0).abs() < 1e-9);
        assert!((xi - sigmoid(1.0)).abs() < 1e-9);
        assert!((xi - 0.7311).abs() < 1e-4);
        let neg = q.scale(C64::new(-1.0, 0.0));
        let (rho, xi) = sign_gate(&p, 0, 1e-12, &q, &neg).unwrap();
        assert!((rho + 1.0).abs() < 1e-9);
        assert!((xi - 0.2689).abs() < 1e-4);
        let mut p2 = p.clone();
        p2.heads[0].sign_scale = 17.0;
        let (rho, xi) = sign_gate(&p2, 0, 1e-12, &cv(&[(1.0, 0.0), (0.0, 0.0)]), &cv(&[(0.0, 0.0), (0.0, 3.0)])).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(xi, 0.5);
    }

    #[test]
    fn residual_gate_examples() {
        let mut p = identity_layer(2, 0.0);
        let v = cv(&[(3.0, 1.0), (0.0, 2.0)]);
        assert_eq!(residual_gate(&p, 0, &v, &v, C64::new(4.0, 1.0)), 0.5);
        p.heads[0].mix_weights = [2.0, -1.0, 0.3];
        let z = ComplexVector::zeros(2);
        assert_eq!(residual_gate(&p, 0, &z, &z, C64::new(0.0, 0.0)), 0.5);
        p.heads[0].mix_weights = [1.0, 0.0, 0.0];
        let r_bar = cv(&[(core::f64::consts::E - 1.0, 0.0), (0.0, 0.0)]);
        let g = residual_gate(&p, 0, &r_bar, &v, C64::new(1.0, 0.0));
        // φ(e−1) = 1 → σ(1)
        assert!((g - 1.0 / (1.0 + libm::exp(-1.0))).abs() < 1e-15);
    }

    #[test]
    fn post_gate_examples() {
        let r = cv(&[(2.0, 0.0)]);
        let h = cv(&[(4.0, 0.0)]);
        assert_eq!(post_gate_message(0.3, 0.0, &r, &h).unwrap(), h);
        assert_eq!(post_gate_message(1.0, 1.0, &r, &h).unwrap(), r);
        let m = post_gate_message(0.5, 0.5, &r, &h).unwrap();
        assert!(m.max_abs_diff(&cv(&[(2.5, 0.0)])) < 1e-15);
    }

    #[test]
    fn attention_logit_examples() {
        let mut cfg = ModelConfig {
            hidden_dim: 4,
            lambda_mix: 1.0,
            ..ModelConfig::default()
        };
        let k = LogitKnobs::new(&cfg, 1.0);
        assert!((logit_value(&k, C64::new(2.0, 0.0), 1.0, 1.0) - 1.0).abs() < 1e-15);

        cfg.lambda_mix = 0.0;
        let k = LogitKnobs::new(&cfg, 1.7);
        let q = cv(&[(1.0, 0.2), (0.0, -1.0), (0.5, 0.5), (2.0, 0.0)]);
        let l = attention_logit(&k, &q, &q).unwrap();
        assert!((l - 1.7).abs() < 1e-4);

        cfg.attention_mode = AttentionMode::PhaseNorm;
        cfg.delta = 0.5;
        let k = LogitKnobs::new(&cfg, 2.0);
        assert!((logit_value(&k, C64::new(3.0, 0.0), 1.0, 1.0) - 2.0).abs() < 1e-15);

        cfg.attention_mode = AttentionMode::PhaseAided;
        cfg.kappa = 1.0;
        let k = LogitKnobs::new(&cfg, 1.0);
        // (|s| + κ cos∠s)/√d with s = 2i: (2 + 0)/2
        assert!((logit_value(&k, C64::new(0.0, 2.0), 1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logit_gradients_match_finite_differences() {
        for mode in [AttentionMode::Hybrid, AttentionMode::PhaseAided, AttentionMode::PhaseNorm] {
            let cfg = ModelConfig {
                hidden_dim: 3,
                attention_mode: mode,
                kappa: 0.7,
                delta: 0.4,
                ..ModelConfig::default()
            };
            let k = LogitKnobs::new(&cfg, 1.3);
            for s in [C64::new(0.8, -0.3), C64::new(0.1, 0.05)] {
                let (qn, mn) = (1.1, 0.9);
                let (gs, gmn, gqn) = logit_backward(&k, s, qn, mn, 1.0);
                let h = 1e-6;
                let fd = |f: &dyn Fn(f64) -> f64| (f(h) - f(-h)) / (2.0 * h);
                let d_re = fd(&|e| logit_value(&k, s + C64::new(e, 0.0), qn, mn));
                let d_im = fd(&|e| logit_value(&k, s + C64::new(0.0, e), qn, mn));
                let d_mn = fd(&|e| logit_value(&k, s, qn, mn + e));
                let d_qn = fd(&|e| logit_value(&k, s, qn + e, mn));
                assert!((gs.re - d_re).abs() < 1e-7, "{mode:?} re");
                assert!((gs.im - d_im).abs() < 1e-7, "{mode:?} im");
                assert!((gmn - d_mn).abs() < 1e-7);
                assert!((gqn - d_qn).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn softmax_examples() {
        let a = softmax_attention(&[0.3; 4]).unwrap();
        assert!(a.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let a = softmax_attention(&[0.0, 800.0]).unwrap();
        assert!(a[0] < 1e-300 && (a[1] - 1.0).abs() < 1e-15);
        let l = [0.1, -2.0, 3.5];
        let a = softmax_attention(&l).unwrap();
        let b = softmax_attention(&l.map(|x| x + 123.0)).unwrap();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(softmax_attention(&[]).is_err());
    }

    #[test]
    fn node_norm_examples() {
        let out = node_norm(&cv(&[(1.0, 0.0), (-1.0, 0.0)]), 1e-6);
        assert!(out.max_abs_diff(&cv(&[(1.0, 0.0), (-1.0, 0.0)])) < 1e-5);
        let out = node_norm(&cv(&[(2.0, 1.0), (2.0, 1.0), (2.0, 1.0)]), 1e-6);
        assert_eq!(complex::norm2(&out), 0.0);
        let out = node_norm(&cv(&[(0.0, 2.0), (0.0, 0.0)]), 1e-6);
        assert!(out.max_abs_diff(&cv(&[(0.0, 1.0), (0.0, -1.0)])) < 1e-5);
    }

    #[test]
    fn mod_relu_examples() {
        let out = mod_relu(&cv(&[(3.0, 4.0)]), &[-1.0]).unwrap();
        assert!(out.max_abs_diff(&cv(&[(2.4, 3.2)])) < 1e-15);
        assert_eq!(mod_relu(&cv(&[(1.0, 0.0)]), &[-2.0]).unwrap(), ComplexVector::zeros(1));
        assert_eq!(mod_relu(&cv(&[(0.0, 0.0)]), &[5.0]).unwrap(), ComplexVector::zeros(1));
        assert!(mod_relu(&cv(&[(0.0, 0.0)]), &[]).is_err());
    }

    #[test]
    fn norm_and_activation_are_phase_equivariant() {
        let h = cv(&[(0.3, -1.0), (2.0, 0.1), (-0.7, 0.4)]);
        for psi in [0.4, 2.0, -2.9] {
            let rot = C64::from_polar(1.0, psi);
            let a = node_norm(&h.scale(rot), 1e-6);
            let b = node_norm(&h, 1e-6).scale(rot);
            assert!(a.max_abs_diff(&b) < 1e-12);
            let bias = [0.2, -0.5, -3.0];
            let a = mod_relu(&h.scale(rot), &bias).unwrap();
            let b = mod_relu(&h, &bias).unwrap().scale(rot);
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn block_sic_rank_one_matches_projector() {
        let h = cv(&[(1.0, 0.5), (-0.2, 0.3), (0.8, -1.1)]);
        let x = cv(&[(0.4, 0.1), (1.5, -0.6), (-0.3, 0.9)]);
        let p = ProjectorHandle::new(h.clone(), 1e-3).unwrap();
        let reference = complex::sic_apply(&p, 0.6, &x).unwrap();
        let mut out = ComplexVector::zeros(3);
        let mut coefs = [C64::new(0.0, 0.0)];
        {
            let (or, oi) = out.parts_mut();
            sic_forward((h.re(), h.im()), (x.re(), x.im()), 0.6, 1e-3, 1, (or, oi), &mut coefs);
        }
        assert!(out.max_abs_diff(&reference) < 1e-15);
    }
}
