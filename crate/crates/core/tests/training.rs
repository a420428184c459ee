use gesc_core::graph::{make_splits, Dataset, Graph, Splits};
use gesc_core::train::train;
use gesc_core::{GescConfig, ModelConfig};

fn small_cfg() -> GescConfig {
    let mut cfg = GescConfig::default();
    cfg.model = ModelConfig {
        hidden_dim: 4,
        heads: 1,
        layers: 1,
        dropout: 0.0,
        ..ModelConfig::default()
    };
    cfg.train.lr = 0.05;
    cfg.train.max_epochs = 200;
    cfg.train.patience = 200;
    cfg
}

/// Two cliques whose features point in opposite directions.
fn separable() -> Dataset {
    let mut edges = Vec::new();
    for block in [0usize, 4] {
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((block + a, block + b));
            }
        }
    }
    let g = Graph::new(8, &edges).unwrap();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..8 {
        let c = i / 4;
        let sign = if c == 0 { 1.0 } else { -1.0 };
        features.extend([sign, 0.1 * i as f64, 1.0]);
        labels.push(c);
    }
    let splits = Splits::from_indices(8, &[0, 1, 4, 5], &[2, 6], &[3, 7]).unwrap();
    Dataset::new(g, features, 3, labels, 2, splits).unwrap()
}

#[test]
fn separable_graph_is_fit_exactly() {
    let out = train(&separable(), &small_cfg()).unwrap();
    assert_eq!(out.best().train_acc, 1.0);
    assert_eq!(out.best().val_acc, 1.0);
}

#[test]
fn zero_learning_rate_with_unit_patience_stops_after_two_epochs() {
    let mut cfg = small_cfg();
    cfg.train.lr = 0.0;
    cfg.train.weight_decay = 0.0;
    cfg.train.patience = 1;
    let out = train(&separable(), &cfg).unwrap();
    assert_eq!(out.history.len(), 2);
    assert_eq!(out.best_epoch, 0);
}

#[test]
fn max_epochs_caps_the_history() {
    let mut cfg = small_cfg();
    cfg.train.max_epochs = 7;
    let out = train(&separable(), &cfg).unwrap();
    assert_eq!(out.history.len(), 7);
    assert!(out.best_epoch < 7);
}

#[test]
fn identical_seed_reproduces_history_bit_for_bit() {
    let spec = gesc_core::SyntheticSpec {
        num_nodes: 120,
        feature_dim: 6,
        ..Default::default()
    };
    let data = make_splits(&gesc_core::graph::generate_synthetic(&spec).unwrap(), 10, 3).unwrap();
    let mut cfg = small_cfg();
    cfg.model.heads = 2;
    cfg.model.dropout = 0.3;
    cfg.train.max_epochs = 15;
    let a = train(&data, &cfg).unwrap();
    let b = train(&data, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.params, b.params);
    cfg.train.seed = 1;
    let c = train(&data, &cfg).unwrap();
    assert_ne!(a.history, c.history);
}

#[test]
fn loss_falls_over_fifty_steps() {
    let mut cfg = small_cfg();
    cfg.train.max_epochs = 50;
    cfg.train.lambda_js = 0.0;
    let out = train(&separable(), &cfg).unwrap();
    let first = out.history.first().unwrap().loss_ce;
    let last = out.history.last().unwrap().loss_ce;
    assert!(last < first, "{first} -> {last}");
    assert!(out.history.iter().all(|m| m.loss_js == 0.0));
}

#[test]
fn missing_splits_are_rejected() {
    let mut data = separable();
    data.splits = Splits::empty(8);
    assert!(train(&data, &small_cfg()).is_err());
}
