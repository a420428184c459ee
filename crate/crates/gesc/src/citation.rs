//! Plain-text citation graphs: a `.content` file with one
//! `id feature... label` line per node and a `.cites` file with one
//! `cited citing` pair per line.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use gesc_core::graph::Splits;
use gesc_core::{Dataset, Graph};

use crate::error::{IoError, IoResult};

/// What the loader dropped on the way.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CitationReport {
    /// Citation lines naming an id absent from the content file.
    pub unknown: Vec<(usize, String)>,
    pub self_citations: usize,
    /// Repeats of an already seen pair, in either orientation.
    pub duplicates: usize,
    /// Class names in index order.
    pub class_names: Vec<String>,
}

impl CitationReport {
    /// Human-readable warnings, one per dropped line class.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (line, id) in &self.unknown {
            out.push(format!("cites line {line}: unknown id {id:?}, skipped"));
        }
        if self.self_citations > 0 {
            out.push(format!("{} self-citation(s) dropped", self.self_citations));
        }
        if self.duplicates > 0 {
            out.push(format!("{} duplicate citation pair(s) merged", self.duplicates));
        }
        out
    }
}

fn read_text(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

/// Loads a content/cites pair. Class indices follow the sorted order of
/// the label strings; edges are undirected and deduplicated. The dataset
/// carries no splits.
pub fn load_content_cites(content: impl AsRef<Path>, cites: impl AsRef<Path>) -> IoResult<(Dataset, CitationReport)> {
    let (content, cites) = (content.as_ref(), cites.as_ref());
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width = None;
    for (k, line) in read_text(content)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let parse = |message: String| IoError::Parse {
            path: content.into(),
            line: k + 1,
            message,
        };
        if fields.len() < 3 {
            return Err(parse("expected `id feature... label`".into()));
        }
        let feats = fields[1..fields.len() - 1]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse(format!("cannot parse feature {f:?}"))))
            .collect::<IoResult<Vec<f64>>>()?;
        match width {
            None => width = Some(feats.len()),
            Some(w) if w != feats.len() => return Err(parse(format!("{} features, earlier lines have {w}", feats.len()))),
            _ => {}
        }
        if ids.insert(fields[0].to_string(), rows.len()).is_some() {
            return Err(parse(format!("id {:?} appears twice", fields[0])));
        }
        rows.push(feats);
        raw_labels.push(fields[fields.len() - 1].to_string());
    }
    let n = rows.len();
    let feature_dim = width.unwrap_or(0);

    let class_names: Vec<String> = raw_labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw_labels
        .iter()
        .map(|l| class_names.binary_search(l).expect("label collected above"))
        .collect();

    let mut report = CitationReport {
        class_names,
        ..Default::default()
    };
    let mut pairs = Vec::new();
    for (k, line) in read_text(cites)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(IoError::Parse {
                path: cites.into(),
                line: k + 1,
                message: format!("expected `cited citing`, found {} fields", fields.len()),
            });
        }
        match (ids.get(fields[0]), ids.get(fields[1])) {
            (Some(&a), Some(&b)) => pairs.push((a, b)),
            (None, _) => report.unknown.push((k + 1, fields[0].to_string())),
            (_, None) => report.unknown.push((k + 1, fields[1].to_string())),
        }
    }
    let (graph, dedup) = Graph::from_pairs_lenient(n, &pairs)?;
    report.self_citations = dedup.self_loops;
    report.duplicates = dedup.duplicates;

    let features = rows.into_iter().flatten().collect();
    let num_classes = report.class_names.len();
    let data = Dataset::new(graph, features, feature_dim, labels, num_classes, Splits::empty(n))?;
    Ok((data, report))
}
