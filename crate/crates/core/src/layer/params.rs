use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{kernels, ComplexMatrix, C64};
use crate::config::{ModelConfig, ParamMode};
use crate::rng::ChaCha8Rng;

/// `W̃ = R ⊙ e^{iΦ}` (and likewise for Q), acting elementwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTransform {
    pub r_w: Vec<f64>,
    pub phi_w: Vec<f64>,
    pub r_q: Vec<f64>,
    pub phi_q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HeadTransform {
    Full { w: ComplexMatrix, q: ComplexMatrix },
    Diagonal(DiagonalTransform),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    W,
    Q,
}

impl HeadTransform {
    fn zeros_like(&self) -> Self {
        match self {
            Self::Full { w, q } => Self::Full {
                w: ComplexMatrix::zeros(w.rows(), w.cols()),
                q: ComplexMatrix::zeros(q.rows(), q.cols()),
            },
            Self::Diagonal(t) => Self::Diagonal(DiagonalTransform {
                r_w: vec![0.0; t.r_w.len()],
                phi_w: vec![0.0; t.phi_w.len()],
                r_q: vec![0.0; t.r_q.len()],
                phi_q: vec![0.0; t.phi_q.len()],
            }),
        }
    }

    /// `out = W·x` or `out = Q·x`.
    pub(crate) fn apply(&self, which: Which, xr: &[f64], xi: &[f64], or: &mut [f64], oi: &mut [f64]) {
        match self {
            Self::Full { w, q } => {
                let m = if which == Which::W { w } else { q };
                kernels::matvec(m, xr, xi, or, oi);
            }
            Self::Diagonal(t) => {
                let (r, phi) = t.pick(which);
                for k in 0..xr.len() {
                    let z = C64::from_polar(r[k], phi[k]) * C64::new(xr[k], xi[k]);
                    or[k] = z.re;
                    oi[k] = z.im;
                }
            }
        }
    }

    /// Backward of `y = T·x`: accumulates `T^H g` into `gx` and the
    /// parameter gradient into `grad`.
    pub(crate) fn backward(
        &self,
        which: Which,
        grad: &mut HeadTransform,
        x: (&[f64], &[f64]),
        g: (&[f64], &[f64]),
        gx: (&mut [f64], &mut [f64]),
    ) {
        match (self, grad) {
            (Self::Full { w, q }, Self::Full { w: gw, q: gq }) => {
                let (m, gm) = if which == Which::W { (w, gw) } else { (q, gq) };
                kernels::matvec_adjoint_acc(m, g.0, g.1, gx.0, gx.1);
                kernels::outer_acc(gm, g.0, g.1, x.0, x.1);
            }
            (Self::Diagonal(t), Self::Diagonal(gt)) => {
                let (r, phi) = t.pick(which);
                let (gr, gphi) = gt.pick_mut(which);
                for k in 0..x.0.len() {
                    let unit = C64::from_polar(1.0, phi[k]);
                    let xk = C64::new(x.0[k], x.1[k]);
                    let gk = C64::new(g.0[k], g.1[k]);
                    let gxk = (unit * r[k]).conj() * gk;
                    gx.0[k] += gxk.re;
                    gx.1[k] += gxk.im;
                    // y = R e^{iΦ} x
                    let ux = unit * xk;
                    gr[k] += (gk.conj() * ux).re;
                    let y = ux * r[k];
                    gphi[k] += (gk.conj() * C64::new(0.0, 1.0) * y).re;
                }
            }
            _ => unreachable!("gradient buffer shaped differently from parameters"),
        }
    }

    /// Spectral norm bound source: the dense matrix of W or Q.
    pub fn dense(&self, which: Which) -> ComplexMatrix {
        match self {
            Self::Full { w, q } => {
                if which == Which::W {
                    w.clone()
                } else {
                    q.clone()
                }
            }
            Self::Diagonal(t) => {
                let (r, phi) = t.pick(which);
                let mut m = ComplexMatrix::zeros(r.len(), r.len());
                for k in 0..r.len() {
                    m.set(k, k, C64::from_polar(r[k], phi[k]));
                }
                m
            }
        }
    }

    pub fn dense_w(&self) -> ComplexMatrix {
        self.dense(Which::W)
    }

    pub fn dense_q(&self) -> ComplexMatrix {
        self.dense(Which::Q)
    }
}

impl DiagonalTransform {
    fn pick(&self, which: Which) -> (&[f64], &[f64]) {
        match which {
            Which::W => (&self.r_w, &self.phi_w),
            Which::Q => (&self.r_q, &self.phi_q),
        }
    }

    fn pick_mut(&mut self, which: Which) -> (&mut [f64], &mut [f64]) {
        match which {
            Which::W => (&mut self.r_w, &mut self.phi_w),
            Which::Q => (&mut self.r_q, &mut self.phi_q),
        }
    }
}

/// Learnable quantities of one attention head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub transform: HeadTransform,
    /// Sign-gate slope `c_m`.
    pub sign_scale: f64,
    /// Sign-gate offset `d_m`.
    pub sign_shift: f64,
    /// Residual-gate weights `a_m` over the three log-magnitude features.
    pub mix_weights: [f64; 3],
    /// Residual-gate bias `b_m`.
    pub mix_bias: f64,
    /// `ln γ_m`; the temperature is `exp(log_gamma)` and hence always positive.
    pub log_gamma: f64,
}

impl HeadParams {
    pub fn gamma(&self) -> f64 {
        libm::exp(self.log_gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub heads: Vec<HeadParams>,
    /// One transport phase per undirected edge.
    pub theta: Vec<f64>,
    pub modrelu_bias: Vec<f64>,
}

/// Parameter groups, used for weight decay and for gradient reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamClass {
    Lift,
    W,
    Q,
    Theta,
    SignScale,
    SignShift,
    MixWeights,
    MixBias,
    Temperature,
    ModReluBias,
    ReadoutNorm,
    Classifier,
}

/// A named view of one parameter tensor.
pub struct TensorView<'a> {
    pub name: String,
    pub class: ParamClass,
    /// Whether weight decay applies.
    pub decay: bool,
    pub data: &'a [f64],
}

pub struct TensorViewMut<'a> {
    pub name: String,
    pub class: ParamClass,
    pub decay: bool,
    pub data: &'a mut [f64],
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, variance: f64) -> Vec<f64> {
    // U(-a, a) has variance a²/3
    let a = libm::sqrt(3.0 * variance);
    (0..n).map(|_| rng.random_range(-a..a)).collect()
}

impl LayerParams {
    /// θ = 0, neutral gates (c=1, d=0, a=0, b=0), γ = 1, zero modReLU bias;
    /// W and Q real and imaginary parts each drawn with variance `1/(2d)`.
    pub fn init(cfg: &ModelConfig, num_edges: usize, rng: &mut ChaCha8Rng) -> Self {
        let d = cfg.hidden_dim;
        let heads = (0..cfg.heads)
            .map(|_| {
                let transform = match cfg.param_mode {
                    ParamMode::Full => {
                        let var = 1.0 / (2.0 * d as f64);
                        let w = ComplexMatrix::from_parts(d, d, uniform(rng, d * d, var), uniform(rng, d * d, var)).unwrap();
                        let q = ComplexMatrix::from_parts(d, d, uniform(rng, d * d, var), uniform(rng, d * d, var)).unwrap();
                        HeadTransform::Full { w, q }
                    }
                    ParamMode::Diagonal => {
                        let pi = core::f64::consts::PI;
                        let phases = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.random_range(-pi..pi)).collect::<Vec<_>>();
                        let phi_w = phases(rng);
                        let phi_q = phases(rng);
                        HeadTransform::Diagonal(DiagonalTransform {
                            r_w: vec![1.0; d],
                            phi_w,
                            r_q: vec![1.0; d],
                            phi_q,
                        })
                    }
                };
                HeadParams {
                    transform,
                    sign_scale: 1.0,
                    sign_shift: 0.0,
                    mix_weights: [0.0; 3],
                    mix_bias: 0.0,
                    log_gamma: 0.0,
                }
            })
            .collect();
        Self {
            heads,
            theta: vec![0.0; num_edges],
            modrelu_bias: vec![0.0; d],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            heads: self
                .heads
                .iter()
                .map(|h| HeadParams {
                    transform: h.transform.zeros_like(),
                    sign_scale: 0.0,
                    sign_shift: 0.0,
                    mix_weights: [0.0; 3],
                    mix_bias: 0.0,
                    log_gamma: 0.0,
                })
                .collect(),
            theta: vec![0.0; self.theta.len()],
            modrelu_bias: vec![0.0; self.modrelu_bias.len()],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.modrelu_bias.len()
    }

    pub fn tensors(&self, prefix: &str) -> Vec<TensorView<'_>> {
        let mut out = Vec::new();
        for (m, h) in self.heads.iter().enumerate() {
            let p = format!("{prefix}.head{m}");
            match &h.transform {
                HeadTransform::Full { w, q } => {
                    out.push(view(format!("{p}.w.re"), ParamClass::W, true, w.re()));
                    out.push(view(format!("{p}.w.im"), ParamClass::W, true, w.im()));
                    out.push(view(format!("{p}.q.re"), ParamClass::Q, true, q.re()));
                    out.push(view(format!("{p}.q.im"), ParamClass::Q, true, q.im()));
                }
                HeadTransform::Diagonal(t) => {
                    out.push(view(format!("{p}.w.r"), ParamClass::W, true, &t.r_w));
                    out.push(view(format!("{p}.w.phi"), ParamClass::W, false, &t.phi_w));
                    out.push(view(format!("{p}.q.r"), ParamClass::Q, true, &t.r_q));
                    out.push(view(format!("{p}.q.phi"), ParamClass::Q, false, &t.phi_q));
                }
            }
            out.push(view(format!("{p}.sign_scale"), ParamClass::SignScale, false, core::slice::from_ref(&h.sign_scale)));
            out.push(view(format!("{p}.sign_shift"), ParamClass::SignShift, false, core::slice::from_ref(&h.sign_shift)));
            out.push(view(format!("{p}.mix_weights"), ParamClass::MixWeights, false, &h.mix_weights));
            out.push(view(format!("{p}.mix_bias"), ParamClass::MixBias, false, core::slice::from_ref(&h.mix_bias)));
            out.push(view(format!("{p}.log_gamma"), ParamClass::Temperature, false, core::slice::from_ref(&h.log_gamma)));
        }
        out.push(view(format!("{prefix}.theta"), ParamClass::Theta, false, &self.theta));
        out.push(view(format!("{prefix}.modrelu_bias"), ParamClass::ModReluBias, false, &self.modrelu_bias));
        out
    }

    pub fn tensors_mut(&mut self, prefix: &str) -> Vec<TensorViewMut<'_>> {
        let mut out = Vec::new();
        for (m, h) in self.heads.iter_mut().enumerate() {
            let p = format!("{prefix}.head{m}");
            match &mut h.transform {
                HeadTransform::Full { w, q } => {
                    let (wr, wi) = w.parts_mut();
                    out.push(view_mut(format!("{p}.w.re"), ParamClass::W, true, wr));
                    out.push(view_mut(format!("{p}.w.im"), ParamClass::W, true, wi));
                    let (qr, qi) = q.parts_mut();
                    out.push(view_mut(format!("{p}.q.re"), ParamClass::Q, true, qr));
                    out.push(view_mut(format!("{p}.q.im"), ParamClass::Q, true, qi));
                }
                HeadTransform::Diagonal(t) => {
                    out.push(view_mut(format!("{p}.w.r"), ParamClass::W, true, &mut t.r_w));
                    out.push(view_mut(format!("{p}.w.phi"), ParamClass::W, false, &mut t.phi_w));
                    out.push(view_mut(format!("{p}.q.r"), ParamClass::Q, true, &mut t.r_q));
                    out.push(view_mut(format!("{p}.q.phi"), ParamClass::Q, false, &mut t.phi_q));
                }
            }
            out.push(view_mut(format!("{p}.sign_scale"), ParamClass::SignScale, false, core::slice::from_mut(&mut h.sign_scale)));
            out.push(view_mut(format!("{p}.sign_shift"), ParamClass::SignShift, false, core::slice::from_mut(&mut h.sign_shift)));
            out.push(view_mut(format!("{p}.mix_weights"), ParamClass::MixWeights, false, &mut h.mix_weights));
            out.push(view_mut(format!("{p}.mix_bias"), ParamClass::MixBias, false, core::slice::from_mut(&mut h.mix_bias)));
            out.push(view_mut(format!("{p}.log_gamma"), ParamClass::Temperature, false, core::slice::from_mut(&mut h.log_gamma)));
        }
        out.push(view_mut(format!("{prefix}.theta"), ParamClass::Theta, false, &mut self.theta));
        out.push(view_mut(format!("{prefix}.modrelu_bias"), ParamClass::ModReluBias, false, &mut self.modrelu_bias));
        out
    }

    /// Clamps diagonal magnitudes back to `R ≥ 0`.
    pub fn project_constraints(&mut self) {
        for h in &mut self.heads {
            if let HeadTransform::Diagonal(t) = &mut h.transform {
                for r in t.r_w.iter_mut().chain(t.r_q.iter_mut()) {
                    *r = r.max(0.0);
                }
            }
        }
    }
}

pub(crate) fn view(name: String, class: ParamClass, decay: bool, data: &[f64]) -> TensorView<'_> {
    TensorView { name, class, decay, data }
}

pub(crate) fn view_mut(name: String, class: ParamClass, decay: bool, data: &mut [f64]) -> TensorViewMut<'_> {
    TensorViewMut { name, class, decay, data }
}
