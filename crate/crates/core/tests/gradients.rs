//! Central finite differences against the hand-written reverse pass.

use gesc_core::config::{AttentionMode, GescConfig, ModelConfig, ParamMode, SicPosition, TrainConfig};
use gesc_core::verify::{gradient_check, VerificationReport};

fn base() -> GescConfig {
    GescConfig {
        model: ModelConfig {
            hidden_dim: 4,
            heads: 2,
            layers: 2,
            dropout: 0.3,
            ..ModelConfig::default()
        },
        train: TrainConfig {
            lambda_js: 0.5,
            p_edge_drop: 0.3,
            temperature: 0.8,
            ..TrainConfig::default()
        },
    }
}

fn check(cfg: &GescConfig, seed: u64) -> VerificationReport {
    let r = gradient_check(cfg, seed).unwrap();
    assert!(r.pass, "seed {seed}: {r:#?}");
    r
}

#[test]
fn every_parameter_class_matches_finite_differences() {
    for seed in 0..5 {
        let r = check(&base(), seed);
        for class in [
            "W", "Q", "Theta", "SignScale", "SignShift", "MixWeights", "MixBias", "Temperature", "ModReluBias", "Lift",
            "ReadoutNorm", "Classifier",
        ] {
            assert!(r.metrics.contains_key(&format!("class/{class}")), "class {class} missing");
        }
    }
}

#[test]
fn attention_variants_match_finite_differences() {
    for mode in [AttentionMode::PhaseAided, AttentionMode::PhaseNorm] {
        let mut cfg = base();
        cfg.model.attention_mode = mode;
        cfg.model.delta = 0.3;
        check(&cfg, 11);
    }
}

#[test]
fn sic_variants_match_finite_differences() {
    let mut cfg = base();
    cfg.model.sic_position = SicPosition::Post;
    check(&cfg, 12);
    let mut cfg = base();
    cfg.model.sic_rank = 2;
    cfg.model.eta_sic = 0.9;
    check(&cfg, 13);
}

#[test]
fn diagonal_and_additive_match_finite_differences() {
    let mut cfg = base();
    cfg.model.param_mode = ParamMode::Diagonal;
    check(&cfg, 14);
    let mut cfg = base();
    cfg.model = cfg.model.additive();
    let r = check(&cfg, 15);
    assert!(!r.metrics.contains_key("class/Theta"));
    assert_eq!(r.metrics["frozen_nonzero"], 0.0);
}

#[test]
fn ce_only_path_with_edge_dropout() {
    let mut cfg = base();
    cfg.train.lambda_js = 0.0;
    cfg.train.ce_edge_drop = true;
    check(&cfg, 16);
}
