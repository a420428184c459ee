use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::complex::{ComplexMatrix, C64};
use crate::error::{GescError, Result};
use crate::graph::{Dataset, Graph};
use crate::layer::{layer_probe, LayerProbe};
use crate::model::{hidden_states, predictions, readout_logits, ModelParams};
use crate::rng::{stream, trial_rng};

/// Per-node phases `φ_i ∈ [0, 2π·alpha_scale)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugePerturbation {
    pub node_phases: Vec<f64>,
    pub alpha_scale: f64,
    pub rng_seed: u64,
}

impl GaugePerturbation {
    pub fn sample(num_nodes: usize, alpha_scale: f64, rng_seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha_scale) {
            return Err(GescError::Parameter("alpha_scale must lie in [0, 1]"));
        }
        let mut rng = trial_rng(rng_seed, stream::GAUGE, 0);
        let tau = 2.0 * core::f64::consts::PI;
        let node_phases = (0..num_nodes).map(|_| alpha_scale * tau * rng.random::<f64>()).collect();
        Ok(Self {
            node_phases,
            alpha_scale,
            rng_seed,
        })
    }

    pub fn from_phases(node_phases: Vec<f64>) -> Self {
        Self {
            node_phases,
            alpha_scale: 1.0,
            rng_seed: 0,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            node_phases: self.node_phases.iter().map(|p| -p).collect(),
            ..self.clone()
        }
    }

    /// Shifted transport phases: `θ_e + φ_v − φ_u` for edge `(u, v)`, so
    /// the arc into `v` picks up exactly the phase of `v`.
    pub fn shift_theta(&self, graph: &Graph, theta: &[f64]) -> Vec<f64> {
        graph
            .edges()
            .iter()
            .zip(theta)
            .map(|(&(u, v), t)| t + self.node_phases[v] - self.node_phases[u])
            .collect()
    }

    /// `h_i ↦ e^{iφ_i} h_i`.
    pub fn rotate(&self, h: &ComplexMatrix) -> ComplexMatrix {
        let mut out = h.clone();
        for (i, &phi) in self.node_phases.iter().enumerate() {
            let u = C64::from_polar(1.0, phi);
            let (r, im) = out.row_mut(i);
            for k in 0..r.len() {
                let z = u * C64::new(r[k], im[k]);
                r[k] = z.re;
                im[k] = z.im;
            }
        }
        out
    }
}

/// Applies the gauge transform to hidden states and transport phases.
pub fn apply_gauge(p: &GaugePerturbation, graph: &Graph, h: &ComplexMatrix, theta: &[f64]) -> Result<(ComplexMatrix, Vec<f64>)> {
    if p.node_phases.len() != graph.num_nodes() || h.rows() != graph.num_nodes() {
        return Err(GescError::Dimension {
            what: "gauge phases",
            expected: graph.num_nodes(),
            found: p.node_phases.len(),
        });
    }
    if theta.len() != graph.num_edges() {
        return Err(GescError::Dimension {
            what: "transport phases",
            expected: graph.num_edges(),
            found: theta.len(),
        });
    }
    Ok((p.rotate(h), p.shift_theta(graph, theta)))
}

/// Copy of `params` with every layer's transport co-transformed.
pub fn gauge_model(p: &GaugePerturbation, graph: &Graph, params: &ModelParams) -> ModelParams {
    let mut out = params.clone();
    for layer in &mut out.layers {
        layer.theta = p.shift_theta(graph, &layer.theta);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeVariant {
    /// States and transports transformed together.
    Full,
    /// States rotated, transports left as they were.
    WithoutTransport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeFuzz {
    pub full: Vec<VerificationReport>,
    pub without_transport: Vec<VerificationReport>,
    /// Mean hidden-state deviation of the ablation strictly increases with
    /// the perturbation scale.
    pub ablation_increasing: bool,
}

fn probes(params: &ModelParams, graph: &Graph, h0: &ComplexMatrix) -> Result<Vec<LayerProbe>> {
    let mut out: Vec<LayerProbe> = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let h = out.last().map_or(h0, |p| &p.output);
        let probe = layer_probe(layer, &params.config, graph, h, None)?;
        out.push(probe);
    }
    Ok(out)
}

fn kl(p: f64, q: f64) -> f64 {
    if p > 0.0 {
        p * (libm::log(p) - libm::log(q))
    } else {
        0.0
    }
}

/// Hidden-state threshold of the co-transformed model.
pub const GAUGE_TOLERANCE: f64 = 1e-9;

/// Runs `trials` perturbations per scale on both variants. Phases for trial
/// `t` come from `seed ⊕ t`, shared between the variants.
pub fn gauge_fuzz(params: &ModelParams, data: &Dataset, alpha_scales: &[f64], trials: usize, seed: u64) -> Result<GaugeFuzz> {
    let graph = &data.graph;
    let c = params.num_classes;
    let h0 = hidden_states(params, data, None)?.swap_remove(0);
    let base = probes(params, graph, &h0)?;
    let final_h = &base.last().unwrap().output;
    let base_logits = readout_logits(params, final_h);
    let base_pred = predictions(&base_logits, c);

    let mut fuzz = GaugeFuzz {
        full: Vec::new(),
        without_transport: Vec::new(),
        ablation_increasing: true,
    };
    for variant in [GaugeVariant::Full, GaugeVariant::WithoutTransport] {
        for &scale in alpha_scales {
            let mut max_dev: f64 = 0.0;
            let mut mean_dev = 0.0;
            let mut max_scalar: f64 = 0.0;
            let mut max_kl: f64 = 0.0;
            let mut max_logit: f64 = 0.0;
            let mut min_agree: f64 = 1.0;
            for t in 0..trials {
                let pert = GaugePerturbation::sample(graph.num_nodes(), scale, seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
                let moved = match variant {
                    GaugeVariant::Full => gauge_model(&pert, graph, params),
                    GaugeVariant::WithoutTransport => params.clone(),
                };
                let run = probes(&moved, graph, &pert.rotate(&h0))?;

                for (a, b) in base.iter().zip(&run) {
                    max_dev = max_dev.max(pert.rotate(&a.output).max_abs_diff(&b.output));
                    let mut kl_sum = 0.0;
                    for (x, y) in a.arcs.iter().zip(&b.arcs) {
                        let d = [
                            (x.score - y.score).norm(),
                            (x.rho - y.rho).abs(),
                            (x.xi - y.xi).abs(),
                            (x.gate - y.gate).abs(),
                            (x.logit - y.logit).abs(),
                            (x.alpha - y.alpha).abs(),
                        ];
                        max_scalar = d.iter().fold(max_scalar, |m, v| m.max(*v));
                        kl_sum += kl(x.alpha, y.alpha);
                    }
                    // one distribution per (head, non-isolated target)
                    let groups = {
                        let mut g: Vec<(usize, usize)> = a.arcs.iter().map(|x| (x.head, x.target)).collect();
                        g.dedup();
                        g.len().max(1)
                    };
                    max_kl = max_kl.max(kl_sum / groups as f64);
                }
                let last = &run.last().unwrap().output;
                let expected = pert.rotate(final_h);
                let (n, d) = (last.rows(), last.cols());
                mean_dev += expected.frobenius_distance(last) / libm::sqrt((n * d) as f64);

                let back = pert.inverse().rotate(last);
                let logits = readout_logits(params, &back);
                for i in 0..n {
                    let row = (0..c).map(|k| { let e = logits[i * c + k] - base_logits[i * c + k]; e * e }).sum::<f64>();
                    max_logit = max_logit.max(libm::sqrt(row));
                }
                let pred = predictions(&logits, c);
                let agree = pred.iter().zip(&base_pred).filter(|(a, b)| a == b).count() as f64 / n as f64;
                min_agree = min_agree.min(agree);
            }
            let name = match variant {
                GaugeVariant::Full => "gauge/full",
                GaugeVariant::WithoutTransport => "gauge/without_transport",
            };
            let threshold = match variant {
                GaugeVariant::Full => GAUGE_TOLERANCE,
                GaugeVariant::WithoutTransport => f64::MAX,
            };
            let mut report = VerificationReport::new(format!("{name}/alpha={scale}"), trials, max_dev, threshold)
                .with("alpha_scale", scale)
                .with("mean_hidden_deviation", mean_dev / trials.max(1) as f64)
                .with("scalar_deviation", max_scalar)
                .with("attention_kl", max_kl)
                .with("logit_l2_deviation", max_logit)
                .with("prediction_agreement", min_agree);
            if variant == GaugeVariant::Full {
                report.pass &= max_kl <= GAUGE_TOLERANCE && min_agree == 1.0;
            }
            match variant {
                GaugeVariant::Full => fuzz.full.push(report),
                GaugeVariant::WithoutTransport => fuzz.without_transport.push(report),
            }
        }
    }
    let means: Vec<f64> = fuzz.without_transport.iter().map(|r| r.metrics["mean_hidden_deviation"]).collect();
    fuzz.ablation_increasing = means.windows(2).all(|w| w[1] > w[0]);
    Ok(fuzz)
}
