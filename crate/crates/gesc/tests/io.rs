use std::fs;
use std::path::Path;

use gesc::checkpoint::{decode, encode, CHECKPOINT_VERSION, MAGIC};
use gesc::{load_bundle, load_checkpoint, load_content_cites, save_bundle, save_checkpoint, IoError};
use gesc_core::graph::{generate_synthetic, make_splits};
use gesc_core::model::ModelParams;
use gesc_core::rng::rng_for;
use gesc_core::{ModelConfig, SyntheticSpec};
use tempfile::tempdir;

fn write_bundle(dir: &Path, manifest: &str, features: &[f64], edges: &str, labels: &str) {
    fs::write(dir.join("manifest.json"), manifest).unwrap();
    let bytes: Vec<u8> = features.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(dir.join("features.bin"), bytes).unwrap();
    fs::write(dir.join("edges.csv"), edges).unwrap();
    fs::write(dir.join("labels.csv"), labels).unwrap();
}

fn manifest(n: usize, e: usize, d: usize, c: usize) -> String {
    format!(
        r#"{{"num_nodes":{n},"num_edges":{e},"feature_dim":{d},"num_classes":{c},
            "files":{{"features":"features.bin","edges":"edges.csv","labels":"labels.csv"}},"format_version":1}}"#
    )
}

#[test]
fn minimal_bundle_loads() {
    let dir = tempdir().unwrap();
    write_bundle(dir.path(), &manifest(2, 1, 3, 2), &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0], "0,1\n", "0\n1\n");
    let data = load_bundle(dir.path()).unwrap();
    assert_eq!(data.num_nodes(), 2);
    assert_eq!(data.graph.edges(), &[(0, 1)]);
    assert_eq!(data.feature_row(1), &[-1.0, 0.5, 0.0]);
    assert_eq!(data.labels, vec![0, 1]);
    assert!(!data.has_splits());
}

#[test]
fn feature_width_mismatch_is_reported() {
    let dir = tempdir().unwrap();
    write_bundle(dir.path(), &manifest(2, 1, 3, 2), &[0.0; 8], "0,1\n", "0\n1\n");
    match load_bundle(dir.path()) {
        Err(IoError::DimensionMismatch { declared: 3, found: 4, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn duplicate_edge_is_rejected_in_either_orientation() {
    let dir = tempdir().unwrap();
    write_bundle(dir.path(), &manifest(3, 2, 1, 2), &[0.0; 3], "0,1\n1,0\n", "0\n1\n0\n");
    assert!(matches!(load_bundle(dir.path()), Err(IoError::DuplicateEdge(0, 1))));
}

#[test]
fn label_out_of_range_names_the_node() {
    let dir = tempdir().unwrap();
    write_bundle(dir.path(), &manifest(2, 1, 1, 2), &[0.0; 2], "0,1\n", "0\n2\n");
    match load_bundle(dir.path()) {
        Err(IoError::LabelOutOfRange { node: 1, label: 2, num_classes: 2 }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_pieces_are_missing_files() {
    let dir = tempdir().unwrap();
    assert!(matches!(load_bundle(dir.path().join("nope")), Err(IoError::MissingFile(_))));
    write_bundle(dir.path(), &manifest(2, 1, 1, 2), &[0.0; 2], "0,1\n", "0\n1\n");
    fs::remove_file(dir.path().join("labels.csv")).unwrap();
    assert!(matches!(load_bundle(dir.path()), Err(IoError::MissingFile(_))));
}

#[test]
fn unknown_bundle_version_is_rejected() {
    let dir = tempdir().unwrap();
    let m = manifest(2, 1, 1, 2).replace("\"format_version\":1", "\"format_version\":9");
    write_bundle(dir.path(), &m, &[0.0; 2], "0,1\n", "0\n1\n");
    assert!(matches!(load_bundle(dir.path()), Err(IoError::Version { found: 9, .. })));
}

#[test]
fn bad_edge_line_reports_its_line() {
    let dir = tempdir().unwrap();
    write_bundle(dir.path(), &manifest(3, 2, 1, 2), &[0.0; 3], "0,1\n1,x\n", "0\n1\n0\n");
    assert!(matches!(load_bundle(dir.path()), Err(IoError::Parse { line: 2, .. })));
}

#[test]
fn bundle_round_trips_with_splits() {
    let spec = SyntheticSpec {
        num_nodes: 60,
        feature_dim: 4,
        num_classes: 3,
        ..Default::default()
    };
    let data = make_splits(&generate_synthetic(&spec).unwrap(), 5, 2).unwrap();
    let dir = tempdir().unwrap();
    save_bundle(&data, dir.path()).unwrap();
    assert_eq!(load_bundle(dir.path()).unwrap(), data);

    let bare = generate_synthetic(&spec).unwrap();
    let other = tempdir().unwrap();
    save_bundle(&bare, other.path()).unwrap();
    assert!(!other.path().join("splits.json").exists());
    assert_eq!(load_bundle(other.path()).unwrap(), bare);
}

#[test]
fn citation_files_are_deduplicated() {
    let dir = tempdir().unwrap();
    let content = dir.path().join("g.content");
    let cites = dir.path().join("g.cites");
    fs::write(&content, "p10 1 0 0 Theory\np7 0 1 0 AI\np3 0 0 1 Theory\n").unwrap();
    fs::write(&cites, "p10 p7\np7 p10\np3 p3\np3 p99\np7 p3\n").unwrap();
    let (data, report) = load_content_cites(&content, &cites).unwrap();
    assert_eq!(data.num_nodes(), 3);
    assert_eq!(data.feature_dim, 3);
    assert_eq!(report.class_names, vec!["AI", "Theory"]);
    assert_eq!(data.labels, vec![1, 0, 1]);
    assert_eq!(data.graph.num_edges(), 2);
    assert_eq!(report.duplicates, 1);
    assert_eq!(report.self_citations, 1);
    assert_eq!(report.unknown, vec![(4, "p99".to_string())]);
    assert_eq!(report.warnings().len(), 3);
}

#[test]
fn ragged_content_line_is_a_parse_error() {
    let dir = tempdir().unwrap();
    let content = dir.path().join("g.content");
    let cites = dir.path().join("g.cites");
    fs::write(&content, "a 1 0 X\nb 1 Y\n").unwrap();
    fs::write(&cites, "").unwrap();
    assert!(matches!(load_content_cites(&content, &cites), Err(IoError::Parse { line: 2, .. })));
}

fn params() -> ModelParams {
    let cfg = ModelConfig {
        hidden_dim: 4,
        heads: 2,
        sic_rank: 2,
        ..ModelConfig::default()
    };
    let mut p = ModelParams::init(&cfg, 5, 3, 7, &mut rng_for(4, 0)).unwrap();
    p.layers[1].theta[3] = 0.25;
    p
}

#[test]
fn checkpoint_round_trips_exactly() {
    let p = params();
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.gesc");
    save_checkpoint(&p, &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), p);
    assert_eq!(decode(&encode(&p)).unwrap(), p);
}

#[test]
fn checkpoint_header_is_checked() {
    let good = encode(&params());
    assert_eq!(&good[..8], MAGIC);

    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(decode(&bad).is_err());

    let mut future = good.clone();
    future[8..12].copy_from_slice(&(CHECKPOINT_VERSION + 1).to_le_bytes());
    assert!(matches!(decode(&future), Err(IoError::Version { .. })));

    assert!(decode(&good[..good.len() - 8]).is_err());
}
