use gesc_core::graph::generate_synthetic;
use gesc_core::layer::{HeadTransform, LayerParams};
use gesc_core::model::{hidden_states, ModelParams};
use gesc_core::rng::rng_for;
use gesc_core::verify::{
    check_lipschitz, gauge_fuzz, laplacian_modes, spectral_norm_bounds, spectral_notch_probe, LayerInstance, VerificationReport,
};
use gesc_core::{ComplexMatrix, Graph, ModelConfig, SyntheticSpec, C64};
use nalgebra::DMatrix;
use rand::Rng;

fn random_complex(rows: usize, cols: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = rng_for(seed, 0);
    DMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn to_gesc(m: &DMatrix<C64>) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.set(r, c, m[(r, c)]);
        }
    }
    out
}

#[test]
fn unitary_matrix_has_unit_norm() {
    for seed in 0..5 {
        let q = random_complex(4, 4, seed).qr().q();
        let s = spectral_norm_bounds(&to_gesc(&q));
        assert!((s.lower - 1.0).abs() < 1e-12, "{s:?}");
        assert!(s.upper >= s.lower && s.upper - 1.0 < 1e-3, "{s:?}");
    }
}

#[test]
fn norm_bounds_bracket_the_largest_singular_value() {
    for seed in 0..20 {
        let m = random_complex(5, 3, 100 + seed);
        let sigma = m.singular_values().max();
        let s = spectral_norm_bounds(&to_gesc(&m));
        assert!(s.lower <= sigma * (1.0 + 1e-12), "{} > {sigma}", s.lower);
        assert!(s.upper >= sigma * (1.0 - 1e-12), "{} < {sigma}", s.upper);
        assert!((s.lower - sigma).abs() < 1e-6 * sigma);
    }
}

#[test]
fn zero_matrix_has_zero_norm() {
    let s = spectral_norm_bounds(&ComplexMatrix::zeros(3, 3));
    assert_eq!((s.lower, s.upper), (0.0, 0.0));
}

/// Star with three leaves, one head, W = w·I and Q = I.
fn star_instance(w: f64) -> LayerInstance {
    let cfg = ModelConfig {
        hidden_dim: 2,
        heads: 1,
        layers: 1,
        ..ModelConfig::default()
    };
    let graph = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
    let mut params = LayerParams::init(&cfg, 3, &mut rng_for(9, 0));
    let mut wm = ComplexMatrix::zeros(2, 2);
    wm.set(0, 0, C64::new(w, 0.0));
    wm.set(1, 1, C64::new(w, 0.0));
    params.heads[0].transform = HeadTransform::Full {
        w: wm,
        q: ComplexMatrix::identity(2),
    };
    let mut rng = rng_for(10, 0);
    let re = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let im = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let states = ComplexMatrix::from_parts(4, 2, re, im).unwrap();
    LayerInstance { cfg, params, graph, states }
}

#[test]
fn star_with_doubling_transform_has_bound_seven() {
    let inst = star_instance(2.0);
    let est = check_lipschitz(&inst, 50, &mut rng_for(11, 0));
    assert_eq!(est.max_in_degree, 3);
    // 1 + Δ·‖W‖ = 1 + 3·2, up to the trace-power slack d^{1/2048}
    assert!(est.analytic >= 7.0 - 1e-12 && est.analytic < 7.01, "{}", est.analytic);
    assert!(est.empirical <= est.analytic);
    assert!(est.alpha_max_observed <= 1.0);
}

#[test]
fn zero_transform_gives_identity_map() {
    let inst = star_instance(0.0);
    let est = check_lipschitz(&inst, 50, &mut rng_for(12, 0));
    assert_eq!(est.analytic, 1.0);
    assert!((est.empirical - 1.0).abs() < 1e-12, "{}", est.empirical);
    assert!((est.empirical_nonlinear - 1.0).abs() < 1e-12);
}

#[test]
fn two_node_laplacian_modes() {
    let g = Graph::new(2, &[(0, 1)]).unwrap();
    let modes = laplacian_modes(&g).unwrap();
    assert!(modes.eigenvalues[0].abs() < 1e-14);
    assert!((modes.eigenvalues[1] - 2.0).abs() < 1e-14);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v0 = modes.vectors.column(0);
    let v1 = modes.vectors.column(1);
    assert!((v0[0].abs() - h).abs() < 1e-14 && (v0[0] - v0[1]).abs() < 1e-14);
    assert!((v1[0].abs() - h).abs() < 1e-14 && (v1[0] + v1[1]).abs() < 1e-14);
}

fn small_synthetic(n: usize) -> gesc_core::Dataset {
    generate_synthetic(&SyntheticSpec {
        num_nodes: n,
        feature_dim: 5,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn notch_probe_at_depth_zero_is_identical_across_settings() {
    let data = small_synthetic(40);
    let cfg = ModelConfig {
        hidden_dim: 4,
        heads: 2,
        ..ModelConfig::default()
    };
    let params = ModelParams::for_dataset(&cfg, &data, &mut rng_for(1, 0)).unwrap();
    let h0 = hidden_states(&params, &data, None).unwrap().swap_remove(0);
    let rows = spectral_notch_probe(&data.graph, &cfg, &h0, 0, 3).unwrap();
    assert_eq!(rows.len(), 6);
    let (off, on): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r.eta_sic == 0.0);
    for (a, b) in off.iter().zip(&on) {
        assert_eq!(a.band, b.band);
        assert_eq!(a.energy, b.energy);
    }
    let total: f64 = off.iter().map(|r| r.fraction).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn zero_gauge_scale_leaves_everything_unchanged() {
    let data = small_synthetic(30);
    let cfg = ModelConfig {
        hidden_dim: 4,
        heads: 2,
        ..ModelConfig::default()
    };
    let params = ModelParams::for_dataset(&cfg, &data, &mut rng_for(2, 0)).unwrap();
    let fuzz = gauge_fuzz(&params, &data, &[0.0], 3, 7).unwrap();
    for r in fuzz.full.iter().chain(&fuzz.without_transport) {
        assert_eq!(r.max_deviation, 0.0, "{}", r.property);
        assert_eq!(r.metrics["prediction_agreement"], 1.0);
        assert!(r.pass);
    }
}

#[test]
fn report_round_trips_through_json() {
    let r = VerificationReport::new("bounds/example", 10, 1e-13, 1e-12).with("slack", -0.5);
    assert!(r.pass);
    let text = serde_json::to_string(&r).unwrap();
    let back: VerificationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    assert!(!VerificationReport::new("x", 1, 2.0, 1.0).pass);
}
