//! Graph-bundle directory: `manifest.json`, little-endian `features.bin`,
//! `edges.csv` (one `i,j` per undirected edge), `labels.csv` and an
//! optional `splits.json`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use gesc_core::graph::Splits;
use gesc_core::{Dataset, Graph};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, IoResult};

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleFiles {
    pub features: String,
    pub edges: String,
    pub labels: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<String>,
}

impl Default for BundleFiles {
    fn default() -> Self {
        Self {
            features: "features.bin".into(),
            edges: "edges.csv".into(),
            labels: "labels.csv".into(),
            splits: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub files: BundleFiles,
    pub format_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFile {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn read(path: &Path) -> IoResult<Vec<u8>> {
    fs::read(path).map_err(|e| IoError::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> IoResult<T> {
    serde_json::from_slice(&read(path)?).map_err(|e| IoError::json(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> IoResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::io(path, e))
}

fn csv_reader(path: &Path) -> IoResult<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: Option<&str>, what: &str) -> IoResult<T> {
    let raw = field.ok_or_else(|| IoError::Parse {
        path: path.into(),
        line,
        message: format!("missing {what}"),
    })?;
    raw.parse().map_err(|_| IoError::Parse {
        path: path.into(),
        line,
        message: format!("cannot parse {what} from {raw:?}"),
    })
}

fn read_features(path: &Path, m: &Manifest) -> IoResult<Vec<f64>> {
    let bytes = read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(IoError::Format(format!("{}: length {} is not a multiple of 8", path.display(), bytes.len())));
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    if values.len() != m.num_nodes * m.feature_dim {
        return Err(if m.num_nodes > 0 && values.len().is_multiple_of(m.num_nodes) {
            IoError::DimensionMismatch {
                what: "feature columns",
                declared: m.feature_dim,
                found: values.len() / m.num_nodes,
            }
        } else {
            IoError::DimensionMismatch {
                what: "feature values",
                declared: m.num_nodes * m.feature_dim,
                found: values.len(),
            }
        });
    }
    Ok(values)
}

fn read_edges(path: &Path, m: &Manifest) -> IoResult<Vec<(usize, usize)>> {
    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(m.num_edges);
    for rec in csv_reader(path)?.records() {
        let rec = rec.map_err(|e| IoError::Format(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(IoError::Parse {
                path: path.into(),
                line,
                message: format!("expected `i,j`, found {} fields", rec.len()),
            });
        }
        let a: usize = parse_field(path, line, rec.get(0), "source node")?;
        let b: usize = parse_field(path, line, rec.get(1), "target node")?;
        if a >= m.num_nodes || b >= m.num_nodes || a == b {
            return Err(IoError::Parse {
                path: path.into(),
                line,
                message: format!("edge ({a},{b}) is a self-loop or leaves [0, {})", m.num_nodes),
            });
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(IoError::DuplicateEdge(a.min(b), a.max(b)));
        }
        edges.push((a, b));
    }
    if edges.len() != m.num_edges {
        return Err(IoError::DimensionMismatch {
            what: "undirected edges",
            declared: m.num_edges,
            found: edges.len(),
        });
    }
    Ok(edges)
}

fn read_labels(path: &Path, m: &Manifest) -> IoResult<Vec<usize>> {
    let mut labels = Vec::with_capacity(m.num_nodes);
    for rec in csv_reader(path)?.records() {
        let rec = rec.map_err(|e| IoError::Format(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let y: usize = parse_field(path, line, rec.get(0), "label")?;
        if y >= m.num_classes {
            return Err(IoError::LabelOutOfRange {
                node: labels.len(),
                label: y,
                num_classes: m.num_classes,
            });
        }
        labels.push(y);
    }
    if labels.len() != m.num_nodes {
        return Err(IoError::DimensionMismatch {
            what: "labels",
            declared: m.num_nodes,
            found: labels.len(),
        });
    }
    Ok(labels)
}

/// Reads and validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> IoResult<Dataset> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(IoError::MissingFile(dir.into()));
    }
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    if manifest.format_version != BUNDLE_VERSION {
        return Err(IoError::Version {
            what: "bundle",
            expected: BUNDLE_VERSION,
            found: manifest.format_version,
        });
    }
    let features = read_features(&dir.join(&manifest.files.features), &manifest)?;
    let edges = read_edges(&dir.join(&manifest.files.edges), &manifest)?;
    let labels = read_labels(&dir.join(&manifest.files.labels), &manifest)?;
    let n = manifest.num_nodes;
    let splits = match &manifest.files.splits {
        Some(name) => {
            let s: SplitFile = read_json(&dir.join(name))?;
            Splits::from_indices(n, &s.train, &s.val, &s.test)?
        }
        None => Splits::empty(n),
    };
    let graph = Graph::new(n, &edges)?;
    Ok(Dataset::new(graph, features, manifest.feature_dim, labels, manifest.num_classes, splits)?)
}

/// Writes `data` as a bundle, creating `dir` if needed. Splits are written
/// only when the training mask is nonempty. Returns the manifest path.
pub fn save_bundle(data: &Dataset, dir: impl AsRef<Path>) -> IoResult<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut files = BundleFiles::default();

    let mut bytes = Vec::with_capacity(data.features.len() * 8);
    for v in &data.features {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let path = dir.join(&files.features);
    fs::write(&path, bytes).map_err(|e| IoError::io(&path, e))?;

    let path = dir.join(&files.edges);
    let mut w = csv::Writer::from_path(&path).map_err(|e| IoError::Format(format!("{}: {e}", path.display())))?;
    for &(a, b) in data.graph.edges() {
        w.write_record([a.to_string(), b.to_string()])
            .map_err(|e| IoError::Format(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| IoError::io(&path, e))?;

    let path = dir.join(&files.labels);
    let text: String = data.labels.iter().map(|y| format!("{y}\n")).collect();
    fs::write(&path, text).map_err(|e| IoError::io(&path, e))?;

    if data.has_splits() {
        files.splits = Some("splits.json".into());
        let s = SplitFile {
            train: Splits::indices(&data.splits.train),
            val: Splits::indices(&data.splits.val),
            test: Splits::indices(&data.splits.test),
        };
        write_json(&dir.join("splits.json"), &s)?;
    }

    let manifest = Manifest {
        num_nodes: data.num_nodes(),
        num_edges: data.graph.num_edges(),
        feature_dim: data.feature_dim,
        num_classes: data.num_classes,
        files,
        format_version: BUNDLE_VERSION,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}
