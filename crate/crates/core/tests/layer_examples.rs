//! Worked layer examples against scalar hand computations.

use gesc_core::config::ModelConfig;
use gesc_core::graph::Graph;
use gesc_core::layer::{layer_forward, layer_probe, mod_relu, node_norm, HeadTransform, LayerParams};
use gesc_core::rng::rng_for;
use gesc_core::{ComplexMatrix, ComplexVector, C64};
use num_complex::Complex64;

fn states(rows: &[&[C64]]) -> ComplexMatrix {
    let d = rows[0].len();
    let mut m = ComplexMatrix::zeros(rows.len(), d);
    for (i, r) in rows.iter().enumerate() {
        m.set_row(i, &ComplexVector::from_complex(r));
    }
    m
}

/// `(h − mean)/(dev + ε)` then modReLU with zero bias.
fn norm_act_oracle(h: &[C64], eps: f64) -> Vec<C64> {
    let d = h.len() as f64;
    let mu: C64 = h.iter().sum::<C64>() / d;
    let dev = (h.iter().map(|z| (z - mu).norm_sqr()).sum::<f64>() / d).sqrt();
    h.iter().map(|z| (z - mu) / (dev + eps)).collect()
}

fn close(a: &ComplexVector, b: &[C64], tol: f64) -> bool {
    a.to_complex().iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

#[test]
fn edgeless_graph_reduces_to_norm_and_activation() {
    let cfg = ModelConfig {
        hidden_dim: 3,
        heads: 2,
        ..ModelConfig::default()
    };
    let g = Graph::new(3, &[]).unwrap();
    let mut params = LayerParams::init(&cfg, 0, &mut rng_for(1, 0));
    params.modrelu_bias = vec![-0.2, 0.1, 0.0];
    let h = states(&[
        &[C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.3, -1.0)],
        &[C64::new(0.0, 0.0), C64::new(2.0, 2.0), C64::new(-1.0, 0.5)],
        &[C64::new(4.0, -1.0), C64::new(0.1, 0.1), C64::new(0.0, 3.0)],
    ]);
    let (out, _) = layer_forward(&params, &cfg, &g, &h, None).unwrap();
    for i in 0..3 {
        let expected = mod_relu(&node_norm(&h.row_vector(i), cfg.norm_epsilon), &params.modrelu_bias).unwrap();
        assert_eq!(out.row_vector(i), expected);
    }
}

#[test]
fn dropped_edges_behave_like_missing_edges() {
    let cfg = ModelConfig {
        hidden_dim: 2,
        heads: 1,
        ..ModelConfig::default()
    };
    let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
    let empty = Graph::new(3, &[]).unwrap();
    let params = LayerParams::init(&cfg, 2, &mut rng_for(2, 0));
    let mut bare = params.clone();
    bare.theta.clear();
    let h = states(&[
        &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
        &[C64::new(-1.0, 2.0), C64::new(0.5, 0.5)],
        &[C64::new(0.2, 0.0), C64::new(3.0, -1.0)],
    ]);
    let (masked, _) = layer_forward(&params, &cfg, &g, &h, Some(&[false, false])).unwrap();
    let (plain, _) = layer_forward(&bare, &cfg, &empty, &h, None).unwrap();
    assert_eq!(masked, plain);
}

#[test]
fn single_edge_hand_trace() {
    // θ = 0, W = Q = I, η = 0, c = 1, d = 0, a = 0, b = 0, γ = 1
    let cfg = ModelConfig {
        hidden_dim: 2,
        heads: 1,
        eta_sic: 0.0,
        ..ModelConfig::default()
    };
    let g = Graph::new(2, &[(0, 1)]).unwrap();
    let mut params = LayerParams::init(&cfg, 1, &mut rng_for(3, 0));
    params.heads[0].transform = HeadTransform::Full {
        w: ComplexMatrix::identity(2),
        q: ComplexMatrix::identity(2),
    };
    let h0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let h1 = [Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)];
    let h = states(&[&h0, &h1]);

    let eps = cfg.epsilon;
    let inner = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let norm = |a: &[C64]| inner(a, a).re.sqrt();
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    // one neighbor each, so α = 1 and m̂ = g ξ h_j + (1 − g) h_j with g = ½
    let pre = |hi: &[C64], hj: &[C64]| -> Vec<C64> {
        let rho = inner(hi, hj).re / (norm(hi) * norm(hj) + eps);
        let xi = sigmoid(rho);
        let coef = 0.5 * xi + 0.5;
        hi.iter().zip(hj).map(|(a, b)| a + b * coef).collect()
    };
    let p0 = pre(&h0, &h1);
    let p1 = pre(&h1, &h0);
    // ρ₀ = Re⟨h0,h1⟩ / (1·√6 + ε) = 1/(√6 + ε)
    let rho0 = 1.0 / (6f64.sqrt() + eps);
    assert!((p0[1] - C64::new(2.0 * (0.5 * sigmoid(rho0) + 0.5), 0.0)).norm() < 1e-15);

    let probe = layer_probe(&params, &cfg, &g, &h, None).unwrap();
    assert!(probe.arcs.iter().all(|a| a.alpha == 1.0 && (a.gate - 0.5).abs() < 1e-15));
    assert!(close(&probe.pre_norm.row_vector(0), &p0, 1e-14));
    assert!(close(&probe.pre_norm.row_vector(1), &p1, 1e-14));
    assert!(close(&probe.output.row_vector(0), &norm_act_oracle(&p0, cfg.norm_epsilon), 1e-12));
    assert!(close(&probe.output.row_vector(1), &norm_act_oracle(&p1, cfg.norm_epsilon), 1e-12));
}

#[test]
fn isolated_node_keeps_residual_path_only() {
    let cfg = ModelConfig {
        hidden_dim: 2,
        heads: 2,
        ..ModelConfig::default()
    };
    let g = Graph::new(3, &[(0, 1)]).unwrap();
    let params = LayerParams::init(&cfg, 1, &mut rng_for(4, 0));
    let h = states(&[
        &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
        &[C64::new(-1.0, 2.0), C64::new(0.5, 0.5)],
        &[C64::new(0.2, 0.7), C64::new(3.0, -1.0)],
    ]);
    let (out, _) = layer_forward(&params, &cfg, &g, &h, None).unwrap();
    let expected = mod_relu(&node_norm(&h.row_vector(2), cfg.norm_epsilon), &params.modrelu_bias).unwrap();
    assert_eq!(out.row_vector(2), expected);
}
