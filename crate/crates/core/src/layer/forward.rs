//! Full-graph layer pass and its reverse.
//!
//! The forward keeps only per-node projections, normalization statistics
//! and attention weights. The backward recomputes each arc's vectors from
//! those, one target neighborhood at a time, which keeps memory at
//! `O(N·M·d + E·M)` regardless of depth.

use alloc::vec;
use alloc::vec::Vec;

use crate::complex::{kernels, ComplexMatrix, C64};
use crate::config::{Gating, ModelConfig, SicPosition};
use crate::error::{GescError, Result};
use crate::graph::{Arc, Graph};

use super::ops::{
    arc_phase, logit_backward, logit_value, mod_relu_backward, mod_relu_slices, node_norm_backward, node_norm_slices,
    sic_backward, sic_forward, sigmoid, softmax_into, LogitKnobs,
};
use super::params::{LayerParams, Which};

/// What a forward pass keeps for its reverse.
#[derive(Debug, Clone)]
pub struct LayerCache {
    input: ComplexMatrix,
    wh: Vec<ComplexMatrix>,
    qh: Vec<ComplexMatrix>,
    qn: Vec<Vec<f64>>,
    /// `alpha[m][arc]`, zero on inactive arcs.
    alpha: Vec<Vec<f64>>,
    normed: ComplexMatrix,
    sigma: Vec<f64>,
    active: Option<Vec<bool>>,
}

impl LayerCache {
    pub fn attention(&self, head: usize) -> &[f64] {
        &self.alpha[head]
    }

    pub fn input(&self) -> &ComplexMatrix {
        &self.input
    }
}

/// Scalars of one arc under one head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcTrace {
    pub head: usize,
    pub target: usize,
    /// CSR position of the arc.
    pub arc: usize,
    pub score: C64,
    pub rho: f64,
    pub xi: f64,
    pub gate: f64,
    pub logit: f64,
    pub alpha: f64,
}

/// Intermediate quantities of a forward pass exposed to the checkers.
#[derive(Debug, Clone)]
pub struct LayerProbe {
    /// `Σ_j α m̂` per head.
    pub head_aggregates: Vec<ComplexMatrix>,
    /// `h + Σ_m Σ_j α m̂`, before NodeNorm.
    pub pre_norm: ComplexMatrix,
    pub output: ComplexMatrix,
    pub arcs: Vec<ArcTrace>,
}

struct Ctx<'a> {
    cfg: &'a ModelConfig,
    params: &'a LayerParams,
    graph: &'a Graph,
    active: Option<&'a [bool]>,
    h: &'a ComplexMatrix,
    wh: &'a [ComplexMatrix],
    qh: &'a [ComplexMatrix],
    qn: &'a [Vec<f64>],
    knobs: Vec<LogitKnobs>,
}

impl Ctx<'_> {
    fn is_active(&self, arc: &Arc) -> bool {
        self.active.is_none_or(|m| m[arc.edge])
    }
}

/// Per-arc scratch; reused across arcs to avoid allocation.
#[derive(Debug, Clone)]
struct ArcEval {
    ht: (Vec<f64>, Vec<f64>),
    r: (Vec<f64>, Vec<f64>),
    m: (Vec<f64>, Vec<f64>),
    msg: (Vec<f64>, Vec<f64>),
    coef_pre: Vec<C64>,
    coef_post: Vec<C64>,
    u: C64,
    s: C64,
    rn: f64,
    nu: f64,
    rho: f64,
    xi: f64,
    f: [f64; 3],
    htn: f64,
    g: f64,
    st: C64,
    mn: f64,
    logit: f64,
}

fn pair(d: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![0.0; d], vec![0.0; d])
}

impl ArcEval {
    fn new(d: usize, rank: usize) -> Self {
        Self {
            ht: pair(d),
            r: pair(d),
            m: pair(d),
            msg: pair(d),
            coef_pre: vec![C64::new(0.0, 0.0); rank],
            coef_post: vec![C64::new(0.0, 0.0); rank],
            u: C64::new(1.0, 0.0),
            s: C64::new(0.0, 0.0),
            rn: 0.0,
            nu: 0.0,
            rho: 0.0,
            xi: 0.0,
            f: [0.0; 3],
            htn: 0.0,
            g: 0.0,
            st: C64::new(0.0, 0.0),
            mn: 0.0,
            logit: 0.0,
        }
    }

    fn eval(&mut self, ctx: &Ctx<'_>, m: usize, i: usize, arc: &Arc) {
        let cfg = ctx.cfg;
        let head = &ctx.params.heads[m];
        let h_i = ctx.h.row(i);
        let (qr, qi) = ctx.qh[m].row(i);
        let qn = ctx.qn[m][i];
        let (wr, wi) = ctx.wh[m].row(arc.source);

        self.u = arc_phase(&ctx.params.theta, arc);
        kernels::scale_into(self.u, wr, wi, &mut self.ht.0, &mut self.ht.1);
        self.htn = kernels::norm(&self.ht.0, &self.ht.1);

        match cfg.sic_position {
            SicPosition::Pre => sic_forward(
                h_i,
                (&self.ht.0, &self.ht.1),
                cfg.eta_sic,
                cfg.epsilon,
                cfg.sic_rank,
                (&mut self.r.0, &mut self.r.1),
                &mut self.coef_pre,
            ),
            SicPosition::Post => {
                self.r.0.copy_from_slice(&self.ht.0);
                self.r.1.copy_from_slice(&self.ht.1);
            }
        }

        self.s = kernels::dot(qr, qi, &self.r.0, &self.r.1);
        self.rn = kernels::norm(&self.r.0, &self.r.1);
        self.nu = qn * self.rn + cfg.epsilon;
        self.rho = self.s.re / self.nu;
        match cfg.gating {
            Gating::Learned => {
                self.xi = sigmoid(head.sign_scale * self.rho + head.sign_shift);
                self.f = [
                    libm::log1p(self.xi * self.rn),
                    libm::log1p(self.htn),
                    libm::log1p(self.s.norm()),
                ];
                let a = &head.mix_weights;
                self.g = sigmoid(a[0] * self.f[0] + a[1] * self.f[1] + a[2] * self.f[2] + head.mix_bias);
            }
            Gating::Additive => {
                self.xi = 1.0;
                self.g = 0.0;
            }
        }

        let (cr, ch) = (self.g * self.xi, 1.0 - self.g);
        for k in 0..self.m.0.len() {
            self.m.0[k] = cr * self.r.0[k] + ch * self.ht.0[k];
            self.m.1[k] = cr * self.r.1[k] + ch * self.ht.1[k];
        }
        self.st = kernels::dot(qr, qi, &self.m.0, &self.m.1);
        self.mn = kernels::norm(&self.m.0, &self.m.1);
        self.logit = logit_value(&ctx.knobs[m], self.st, qn, self.mn);

        match cfg.sic_position {
            SicPosition::Pre => {
                self.msg.0.copy_from_slice(&self.m.0);
                self.msg.1.copy_from_slice(&self.m.1);
            }
            SicPosition::Post => sic_forward(
                h_i,
                (&self.m.0, &self.m.1),
                cfg.eta_sic,
                cfg.epsilon,
                cfg.sic_rank,
                (&mut self.msg.0, &mut self.msg.1),
                &mut self.coef_post,
            ),
        }
    }
}

fn check_shapes(params: &LayerParams, cfg: &ModelConfig, graph: &Graph, h: &ComplexMatrix, active: Option<&[bool]>) -> Result<()> {
    let d = cfg.hidden_dim;
    if params.hidden_dim() != d || h.cols() != d {
        return Err(GescError::Dimension {
            what: "hidden width",
            expected: d,
            found: h.cols(),
        });
    }
    if params.heads.len() != cfg.heads {
        return Err(GescError::Dimension {
            what: "head count",
            expected: cfg.heads,
            found: params.heads.len(),
        });
    }
    if h.rows() != graph.num_nodes() {
        return Err(GescError::Dimension {
            what: "hidden state rows",
            expected: graph.num_nodes(),
            found: h.rows(),
        });
    }
    if params.theta.len() != graph.num_edges() {
        return Err(GescError::Dimension {
            what: "transport phases",
            expected: graph.num_edges(),
            found: params.theta.len(),
        });
    }
    if let Some(m) = active {
        if m.len() != graph.num_edges() {
            return Err(GescError::Dimension {
                what: "edge mask",
                expected: graph.num_edges(),
                found: m.len(),
            });
        }
    }
    Ok(())
}

type Projections = (Vec<ComplexMatrix>, Vec<ComplexMatrix>, Vec<Vec<f64>>);

fn project(params: &LayerParams, h: &ComplexMatrix) -> Projections {
    let (n, d) = (h.rows(), h.cols());
    let mut wh = Vec::with_capacity(params.heads.len());
    let mut qh = Vec::with_capacity(params.heads.len());
    let mut qn = Vec::with_capacity(params.heads.len());
    for head in &params.heads {
        let mut w = ComplexMatrix::zeros(n, d);
        let mut q = ComplexMatrix::zeros(n, d);
        let mut norms = vec![0.0; n];
        for i in 0..n {
            let (xr, xi) = h.row(i);
            let (or, oi) = w.row_mut(i);
            head.transform.apply(Which::W, xr, xi, or, oi);
            let (or, oi) = q.row_mut(i);
            head.transform.apply(Which::Q, xr, xi, or, oi);
            norms[i] = kernels::norm(or, oi);
        }
        wh.push(w);
        qh.push(q);
        qn.push(norms);
    }
    (wh, qh, qn)
}

fn knobs(params: &LayerParams, cfg: &ModelConfig) -> Vec<LogitKnobs> {
    params.heads.iter().map(|h| LogitKnobs::new(cfg, h.gamma())).collect()
}

/// Runs attention over every neighborhood, calling `visit(m, i, arc_pos,
/// eval, alpha)` for each active arc after its weight is known.
fn attend<F>(ctx: &Ctx<'_>, alpha: &mut [Vec<f64>], mut visit: F)
where
    F: FnMut(usize, usize, usize, &ArcEval, f64),
{
    let graph = ctx.graph;
    let d = ctx.cfg.hidden_dim;
    let mut evals: Vec<ArcEval> = Vec::new();
    let mut logits: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut positions: Vec<usize> = Vec::new();
    for i in 0..graph.num_nodes() {
        let start = graph.row_ptr()[i];
        for m in 0..ctx.params.heads.len() {
            positions.clear();
            for (k, arc) in graph.in_arcs(i).iter().enumerate() {
                if ctx.is_active(arc) {
                    positions.push(start + k);
                }
            }
            if positions.is_empty() {
                continue;
            }
            while evals.len() < positions.len() {
                evals.push(ArcEval::new(d, ctx.cfg.sic_rank));
            }
            logits.clear();
            for (slot, &p) in positions.iter().enumerate() {
                evals[slot].eval(ctx, m, i, &graph.arcs()[p]);
                logits.push(evals[slot].logit);
            }
            weights.resize(logits.len(), 0.0);
            softmax_into(&logits, &mut weights);
            for (slot, &p) in positions.iter().enumerate() {
                alpha[m][p] = weights[slot];
                visit(m, i, p, &evals[slot], weights[slot]);
            }
        }
    }
}

fn finish(pre: &ComplexMatrix, bias: &[f64], norm_eps: f64) -> Result<(ComplexMatrix, ComplexMatrix, Vec<f64>)> {
    let (n, d) = (pre.rows(), pre.cols());
    let mut normed = ComplexMatrix::zeros(n, d);
    let mut out = ComplexMatrix::zeros(n, d);
    let mut sigma = vec![0.0; n];
    for i in 0..n {
        let (pr, pi) = pre.row(i);
        let (nr, ni) = normed.row_mut(i);
        sigma[i] = node_norm_slices(pr, pi, norm_eps, nr, ni).1;
        let (nr, ni) = normed.row(i);
        let (or, oi) = out.row_mut(i);
        mod_relu_slices(nr, ni, bias, or, oi);
    }
    if !out.is_finite() {
        return Err(GescError::NonFinite { stage: "layer output" });
    }
    Ok((out, normed, sigma))
}

/// One message-passing layer: `modReLU(NodeNorm(h + Σ_m Σ_j α m̂))`.
/// `active` marks surviving undirected edges (all when `None`).
pub fn layer_forward(
    params: &LayerParams,
    cfg: &ModelConfig,
    graph: &Graph,
    h: &ComplexMatrix,
    active: Option<&[bool]>,
) -> Result<(ComplexMatrix, LayerCache)> {
    check_shapes(params, cfg, graph, h, active)?;
    if !h.is_finite() {
        return Err(GescError::NonFinite { stage: "layer input" });
    }
    let (wh, qh, qn) = project(params, h);
    let ctx = Ctx {
        cfg,
        params,
        graph,
        active,
        h,
        wh: &wh,
        qh: &qh,
        qn: &qn,
        knobs: knobs(params, cfg),
    };
    let mut alpha = vec![vec![0.0; graph.num_arcs()]; params.heads.len()];
    let mut pre = h.clone();
    attend(&ctx, &mut alpha, |_, i, _, ev, a| {
        let (pr, pi) = pre.row_mut(i);
        kernels::axpy(C64::new(a, 0.0), &ev.msg.0, &ev.msg.1, pr, pi);
    });
    if !pre.is_finite() {
        return Err(GescError::NonFinite { stage: "attention aggregation" });
    }
    let (out, normed, sigma) = finish(&pre, &params.modrelu_bias, cfg.norm_epsilon)?;
    let cache = LayerCache {
        input: h.clone(),
        wh,
        qh,
        qn,
        alpha,
        normed,
        sigma,
        active: active.map(|m| m.to_vec()),
    };
    Ok((out, cache))
}

/// Forward pass that also records per-head aggregates, the pre-norm
/// state and every arc's scalars.
pub fn layer_probe(
    params: &LayerParams,
    cfg: &ModelConfig,
    graph: &Graph,
    h: &ComplexMatrix,
    active: Option<&[bool]>,
) -> Result<LayerProbe> {
    check_shapes(params, cfg, graph, h, active)?;
    let (wh, qh, qn) = project(params, h);
    let ctx = Ctx {
        cfg,
        params,
        graph,
        active,
        h,
        wh: &wh,
        qh: &qh,
        qn: &qn,
        knobs: knobs(params, cfg),
    };
    let (n, d) = (h.rows(), h.cols());
    let mut alpha = vec![vec![0.0; graph.num_arcs()]; params.heads.len()];
    let mut heads = vec![ComplexMatrix::zeros(n, d); params.heads.len()];
    let mut arcs = Vec::new();
    let mut pre = h.clone();
    attend(&ctx, &mut alpha, |m, i, p, ev, a| {
        let (pr, pi) = pre.row_mut(i);
        kernels::axpy(C64::new(a, 0.0), &ev.msg.0, &ev.msg.1, pr, pi);
        let (hr, hi) = heads[m].row_mut(i);
        kernels::axpy(C64::new(a, 0.0), &ev.msg.0, &ev.msg.1, hr, hi);
        arcs.push(ArcTrace {
            head: m,
            target: i,
            arc: p,
            score: ev.s,
            rho: ev.rho,
            xi: ev.xi,
            gate: ev.g,
            logit: ev.logit,
            alpha: a,
        });
    });
    let (output, _, _) = finish(&pre, &params.modrelu_bias, cfg.norm_epsilon)?;
    Ok(LayerProbe {
        head_aggregates: heads,
        pre_norm: pre,
        output,
        arcs,
    })
}

#[inline]
fn add_scaled(a: f64, x: &[f64], y: &mut [f64]) {
    for (yk, xk) in y.iter_mut().zip(x) {
        *yk += a * xk;
    }
}

/// Reverse of [`layer_forward`]. Accumulates parameter gradients into
/// `grads` and returns the gradient with respect to the layer input.
pub fn layer_backward(
    params: &LayerParams,
    cfg: &ModelConfig,
    graph: &Graph,
    cache: &LayerCache,
    g_out: &ComplexMatrix,
    grads: &mut LayerParams,
) -> Result<ComplexMatrix> {
    let h = &cache.input;
    let (n, d) = (h.rows(), h.cols());
    let heads = params.heads.len();

    // modReLU and NodeNorm, node by node
    let mut g_pre = ComplexMatrix::zeros(n, d);
    let mut g_norm = pair(d);
    for i in 0..n {
        let (nr, ni) = cache.normed.row(i);
        let (gr, gi) = g_out.row(i);
        mod_relu_backward(
            (nr, ni),
            &params.modrelu_bias,
            (gr, gi),
            (&mut g_norm.0, &mut g_norm.1),
            &mut grads.modrelu_bias,
        );
        let (pr, pi) = g_pre.row_mut(i);
        node_norm_backward((nr, ni), cache.sigma[i], cfg.norm_epsilon, (&g_norm.0, &g_norm.1), (pr, pi));
    }

    // residual path
    let mut g_h = g_pre.clone();
    let mut g_wh = vec![ComplexMatrix::zeros(n, d); heads];
    let mut g_qh = vec![ComplexMatrix::zeros(n, d); heads];
    let mut g_qn = vec![vec![0.0; n]; heads];

    let ctx = Ctx {
        cfg,
        params,
        graph,
        active: cache.active.as_deref(),
        h,
        wh: &cache.wh,
        qh: &cache.qh,
        qn: &cache.qn,
        knobs: knobs(params, cfg),
    };
    let learned = cfg.gating == Gating::Learned;
    let mut evals: Vec<ArcEval> = Vec::new();
    let mut positions: Vec<usize> = Vec::new();
    let mut g_alpha: Vec<f64> = Vec::new();
    // gradient scratch
    let mut gm = pair(d);
    let mut gr_ = pair(d);
    let mut ght = pair(d);
    let mut ghi = pair(d);

    for i in 0..n {
        let start = graph.row_ptr()[i];
        let (gpr, gpi) = g_pre.row(i);
        for m in 0..heads {
            positions.clear();
            for (k, arc) in graph.in_arcs(i).iter().enumerate() {
                if ctx.is_active(arc) {
                    positions.push(start + k);
                }
            }
            if positions.is_empty() {
                continue;
            }
            while evals.len() < positions.len() {
                evals.push(ArcEval::new(d, cfg.sic_rank));
            }
            g_alpha.clear();
            for (slot, &p) in positions.iter().enumerate() {
                let ev = &mut evals[slot];
                ev.eval(&ctx, m, i, &graph.arcs()[p]);
                g_alpha.push(kernels::dot(gpr, gpi, &ev.msg.0, &ev.msg.1).re);
            }
            let alpha = &cache.alpha[m];
            let mean: f64 = positions.iter().zip(&g_alpha).map(|(&p, &ga)| alpha[p] * ga).sum();

            let head = &params.heads[m];
            let knobs = &ctx.knobs[m];
            let qn = cache.qn[m][i];
            let (qr, qi) = cache.qh[m].row(i);
            let h_i = h.row(i);
            for (slot, &p) in positions.iter().enumerate() {
                let ev = &evals[slot];
                let arc = &graph.arcs()[p];
                let a = alpha[p];
                let g_logit = a * (g_alpha[slot] - mean);
                for v in [&mut gm, &mut gr_, &mut ght, &mut ghi] {
                    v.0.fill(0.0);
                    v.1.fill(0.0);
                }
                // G_msg = α G_pre, then through post-position SIC
                match cfg.sic_position {
                    SicPosition::Pre => {
                        add_scaled(a, gpr, &mut gm.0);
                        add_scaled(a, gpi, &mut gm.1);
                    }
                    SicPosition::Post => {
                        let gmsg_r: Vec<f64> = gpr.iter().map(|x| a * x).collect();
                        let gmsg_i: Vec<f64> = gpi.iter().map(|x| a * x).collect();
                        sic_backward(
                            h_i,
                            (&ev.m.0, &ev.m.1),
                            cfg.eta_sic,
                            cfg.epsilon,
                            cfg.sic_rank,
                            &ev.coef_post,
                            (&gmsg_r, &gmsg_i),
                            (&mut gm.0, &mut gm.1),
                            (&mut ghi.0, &mut ghi.1),
                        );
                    }
                }

                // attention logit
                let (g_st, g_mn, g_qn_l) = logit_backward(knobs, ev.st, qn, ev.mn, g_logit);
                grads.heads[m].log_gamma += g_logit * ev.logit;
                g_qn[m][i] += g_qn_l;
                kernels::axpy(g_st, qr, qi, &mut gm.0, &mut gm.1);
                {
                    let (gq_r, gq_i) = g_qh[m].row_mut(i);
                    kernels::axpy(g_st.conj(), &ev.m.0, &ev.m.1, gq_r, gq_i);
                }
                if ev.mn > 0.0 {
                    add_scaled(g_mn / ev.mn, &ev.m.0, &mut gm.0);
                    add_scaled(g_mn / ev.mn, &ev.m.1, &mut gm.1);
                }

                // m̂ = gξ r + (1−g) h̃
                add_scaled(ev.g * ev.xi, &gm.0, &mut gr_.0);
                add_scaled(ev.g * ev.xi, &gm.1, &mut gr_.1);
                add_scaled(1.0 - ev.g, &gm.0, &mut ght.0);
                add_scaled(1.0 - ev.g, &gm.1, &mut ght.1);

                if learned {
                    let gm_r = kernels::dot(&gm.0, &gm.1, &ev.r.0, &ev.r.1).re;
                    let gm_h = kernels::dot(&gm.0, &gm.1, &ev.ht.0, &ev.ht.1).re;
                    let g_g = ev.xi * gm_r - gm_h;
                    let mut g_xi = ev.g * gm_r;

                    let g_z = g_g * ev.g * (1.0 - ev.g);
                    let hg = &mut grads.heads[m];
                    for k in 0..3 {
                        hg.mix_weights[k] += g_z * ev.f[k];
                    }
                    hg.mix_bias += g_z;
                    let gf = [g_z * head.mix_weights[0], g_z * head.mix_weights[1], g_z * head.mix_weights[2]];

                    let mut g_rn = 0.0;
                    let denom = 1.0 + ev.xi * ev.rn;
                    g_xi += gf[0] * ev.rn / denom;
                    g_rn += gf[0] * ev.xi / denom;
                    if ev.htn > 0.0 {
                        let c = gf[1] / (1.0 + ev.htn) / ev.htn;
                        add_scaled(c, &ev.ht.0, &mut ght.0);
                        add_scaled(c, &ev.ht.1, &mut ght.1);
                    }
                    let s_abs = ev.s.norm();
                    let mut g_s = C64::new(0.0, 0.0);
                    if s_abs > 0.0 {
                        g_s += ev.s * (gf[2] / (1.0 + s_abs) / s_abs);
                    }

                    let g_y = g_xi * ev.xi * (1.0 - ev.xi);
                    hg.sign_scale += g_y * ev.rho;
                    hg.sign_shift += g_y;
                    let g_rho = g_y * head.sign_scale;
                    g_s += C64::new(g_rho / ev.nu, 0.0);
                    let g_nu = -g_rho * ev.s.re / (ev.nu * ev.nu);
                    g_qn[m][i] += g_nu * ev.rn;
                    g_rn += g_nu * qn;
                    if ev.rn > 0.0 {
                        add_scaled(g_rn / ev.rn, &ev.r.0, &mut gr_.0);
                        add_scaled(g_rn / ev.rn, &ev.r.1, &mut gr_.1);
                    }
                    kernels::axpy(g_s, qr, qi, &mut gr_.0, &mut gr_.1);
                    let (gq_r, gq_i) = g_qh[m].row_mut(i);
                    kernels::axpy(g_s.conj(), &ev.r.0, &ev.r.1, gq_r, gq_i);
                }

                // r from h̃
                match cfg.sic_position {
                    SicPosition::Pre => sic_backward(
                        h_i,
                        (&ev.ht.0, &ev.ht.1),
                        cfg.eta_sic,
                        cfg.epsilon,
                        cfg.sic_rank,
                        &ev.coef_pre,
                        (&gr_.0, &gr_.1),
                        (&mut ght.0, &mut ght.1),
                        (&mut ghi.0, &mut ghi.1),
                    ),
                    SicPosition::Post => {
                        add_scaled(1.0, &gr_.0, &mut ght.0);
                        add_scaled(1.0, &gr_.1, &mut ght.1);
                    }
                }

                // h̃ = u·W h_j
                if !cfg.freeze_transport {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += ght.1[k] * ev.ht.0[k] - ght.0[k] * ev.ht.1[k];
                    }
                    grads.theta[arc.edge] += arc.sign() * acc;
                }
                let (gw_r, gw_i) = g_wh[m].row_mut(arc.source);
                kernels::axpy(ev.u.conj(), &ght.0, &ght.1, gw_r, gw_i);
                let (gh_r, gh_i) = g_h.row_mut(i);
                add_scaled(1.0, &ghi.0, gh_r);
                add_scaled(1.0, &ghi.1, gh_i);
            }
        }
    }

    // projections back to the input
    for m in 0..heads {
        let transform = &params.heads[m].transform;
        let grad_t = &mut grads.heads[m].transform;
        for i in 0..n {
            let qn = cache.qn[m][i];
            if qn > 0.0 && g_qn[m][i] != 0.0 {
                let (qr, qi) = cache.qh[m].row(i);
                let c = g_qn[m][i] / qn;
                let (gq_r, gq_i) = g_qh[m].row_mut(i);
                add_scaled(c, qr, gq_r);
                add_scaled(c, qi, gq_i);
            }
            let x = h.row(i);
            let (gx_r, gx_i) = g_h.row_mut(i);
            transform.backward(Which::W, grad_t, x, g_wh[m].row(i), (gx_r, gx_i));
            transform.backward(Which::Q, grad_t, x, g_qh[m].row(i), (gx_r, gx_i));
        }
    }
    if !g_h.is_finite() {
        return Err(GescError::NonFinite { stage: "layer backward" });
    }
    Ok(g_h)
}
