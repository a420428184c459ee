//! Undirected graphs stored as directed in-arc CSR, node-classification
//! datasets, splits, homophily, the synthetic block-model generator and
//! edge-dropout masks.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GescError, Result};
use crate::rng::{rng_for, stream, ChaCha8Rng};

/// One directed arc `source → target` of an undirected edge.
///
/// For edge `{u, v}` stored as `u < v`, the arc `u → v` has orientation
/// `+1` and transport phase `+θ`; the arc `v → u` has `-1` and `-θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub source: usize,
    pub edge: usize,
    pub orientation: i8,
}

impl Arc {
    pub fn sign(&self) -> f64 {
        f64::from(self.orientation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    row_ptr: Vec<usize>,
    arcs: Vec<Arc>,
}

/// Diagnostics from [`Graph::from_pairs_lenient`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupReport {
    pub duplicates: usize,
    pub self_loops: usize,
}

impl Graph {
    /// Strict constructor: rejects self-loops, out-of-range endpoints and
    /// duplicate edges in either orientation.
    pub fn new(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(pairs.len());
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if a >= num_nodes || b >= num_nodes {
                return Err(GescError::Graph(format!(
                    "edge {k} ({a},{b}) references a node outside [0, {num_nodes})"
                )));
            }
            if a == b {
                return Err(GescError::Graph(format!("edge {k} is a self-loop on node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(GescError::Graph(format!("duplicate edge {{{},{}}} at position {k}", e.0, e.1)));
            }
            edges.push(e);
        }
        Ok(Self::build(num_nodes, edges))
    }

    /// Drops self-loops and repeated pairs instead of failing.
    pub fn from_pairs_lenient(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<(Self, DedupReport)> {
        let mut report = DedupReport::default();
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b {
                report.self_loops += 1;
                continue;
            }
            let e = (a.min(b), a.max(b));
            if seen.insert(e) {
                kept.push(e);
            } else {
                report.duplicates += 1;
            }
        }
        Ok((Self::new(num_nodes, &kept)?, report))
    }

    fn build(num_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut incoming: Vec<Vec<Arc>> = vec![Vec::new(); num_nodes];
        for (id, &(u, v)) in edges.iter().enumerate() {
            incoming[v].push(Arc {
                source: u,
                edge: id,
                orientation: 1,
            });
            incoming[u].push(Arc {
                source: v,
                edge: id,
                orientation: -1,
            });
        }
        let mut row_ptr = Vec::with_capacity(num_nodes + 1);
        let mut arcs = Vec::with_capacity(2 * edges.len());
        row_ptr.push(0);
        for mut row in incoming {
            row.sort_by_key(|a| (a.source, a.edge));
            arcs.extend(row);
            row_ptr.push(arcs.len());
        }
        Self {
            num_nodes,
            edges,
            row_ptr,
            arcs,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Undirected edges as `(u, v)` with `u < v`; position is the edge id.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// In-arcs of `target`, in CSR order.
    pub fn in_arcs(&self, target: usize) -> &[Arc] {
        &self.arcs[self.row_ptr[target]..self.row_ptr[target + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.row_ptr[node + 1] - self.row_ptr[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_nodes).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Rewrites node ids through `perm` (old id → new id).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::new(self.num_nodes, &pairs)
    }

    /// Subgraph keeping only edges with `keep[e]`; edge ids are compacted.
    pub fn filtered(&self, keep: &[bool]) -> Self {
        let edges = self.edges.iter().zip(keep).filter(|(_, k)| **k).map(|(e, _)| *e).collect();
        Self::build(self.num_nodes, edges)
    }
}

/// Disjoint node masks.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Splits {
    pub fn empty(n: usize) -> Self {
        Self {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    pub fn from_indices(n: usize, train: &[usize], val: &[usize], test: &[usize]) -> Result<Self> {
        let mut s = Self::empty(n);
        for (mask, idx, name) in [(&mut s.train, train, "train"), (&mut s.val, val, "val"), (&mut s.test, test, "test")] {
            for &i in idx {
                if i >= n {
                    return Err(GescError::Dataset(format!("{name} split references node {i} >= {n}")));
                }
                mask[i] = true;
            }
        }
        Ok(s)
    }

    pub fn indices(mask: &[bool]) -> Vec<usize> {
        mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    /// Row-major `N × feature_dim`.
    pub features: Vec<f64>,
    pub feature_dim: usize,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub splits: Splits,
}

impl Dataset {
    pub fn new(
        graph: Graph,
        features: Vec<f64>,
        feature_dim: usize,
        labels: Vec<usize>,
        num_classes: usize,
        splits: Splits,
    ) -> Result<Self> {
        let d = Self {
            graph,
            features,
            feature_dim,
            labels,
            num_classes,
            splits,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_nodes();
        if self.features.len() != n * self.feature_dim {
            return Err(GescError::Dimension {
                what: "feature matrix",
                expected: n * self.feature_dim,
                found: self.features.len(),
            });
        }
        if self.labels.len() != n {
            return Err(GescError::Dimension {
                what: "label vector",
                expected: n,
                found: self.labels.len(),
            });
        }
        if let Some((i, &y)) = self.labels.iter().enumerate().find(|(_, &y)| y >= self.num_classes) {
            return Err(GescError::Dataset(format!("node {i} has label {y} outside [0, {})", self.num_classes)));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(GescError::Dataset("feature matrix contains NaN or Inf".into()));
        }
        for (name, m) in [("train", &self.splits.train), ("val", &self.splits.val), ("test", &self.splits.test)] {
            if m.len() != n {
                return Err(GescError::Dataset(format!("{name} mask has length {} but N = {n}", m.len())));
            }
        }
        for i in 0..n {
            let hits = [self.splits.train[i], self.splits.val[i], self.splits.test[i]].iter().filter(|b| **b).count();
            if hits > 1 {
                return Err(GescError::Dataset(format!("node {i} appears in more than one split")));
            }
        }
        Ok(())
    }

    pub fn has_splits(&self) -> bool {
        self.splits.train.iter().any(|b| *b)
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    /// Relabels nodes through `perm` (old id → new id), moving features,
    /// labels and masks along.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut features = vec![0.0; self.features.len()];
        let mut labels = vec![0; n];
        let mut splits = Splits::empty(n);
        for old in 0..n {
            let new = perm[old];
            features[new * self.feature_dim..(new + 1) * self.feature_dim].copy_from_slice(self.feature_row(old));
            labels[new] = self.labels[old];
            splits.train[new] = self.splits.train[old];
            splits.val[new] = self.splits.val[old];
            splits.test[new] = self.splits.test[old];
        }
        Self::new(self.graph.relabel(perm)?, features, self.feature_dim, labels, self.num_classes, splits)
    }
}

/// Fraction of undirected edges whose endpoints share a label.
pub fn global_homophily(d: &Dataset) -> Result<f64> {
    let edges = d.graph.edges();
    if edges.is_empty() {
        return Err(GescError::UndefinedMetric("homophily of a graph without edges"));
    }
    let same = edges.iter().filter(|(u, v)| d.labels[*u] == d.labels[*v]).count();
    Ok(same as f64 / edges.len() as f64)
}

/// `per_class_train` random nodes of every class for training, the rest
/// split evenly into validation (first half, rounded down) and test.
pub fn make_splits(d: &Dataset, per_class_train: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_for(seed, stream::SPLITS);
    let n = d.num_nodes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.num_classes];
    for (i, &y) in d.labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut splits = Splits::empty(n);
    let mut rest = Vec::with_capacity(n);
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < per_class_train {
            return Err(GescError::Split(format!(
                "class {c} has {} nodes, fewer than the {per_class_train} requested for training",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &i in &members[..per_class_train] {
            splits.train[i] = true;
        }
        rest.extend_from_slice(&members[per_class_train..]);
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let half = rest.len() / 2;
    for &i in &rest[..half] {
        splits.val[i] = true;
    }
    for &i in &rest[half..] {
        splits.test[i] = true;
    }
    let mut out = d.clone();
    out.splits = splits;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub target_homophily: f64,
    pub mean_degree: f64,
    pub feature_signal_strength: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_nodes: 1000,
            num_classes: 2,
            feature_dim: 16,
            target_homophily: 0.2,
            mean_degree: 8.0,
            feature_signal_strength: 0.3,
            rng_seed: 0,
        }
    }
}

/// Block-model generator with exact intra/inter edge counts.
///
/// Labels are balanced and shuffled. `round(h·E)` edges are drawn uniformly
/// among same-label pairs and the rest among cross-label pairs, so the
/// realized homophily equals the target up to rounding. Features are
/// `s·μ_y + sqrt(1 − s²)·noise` with standard-normal class means and noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let SyntheticSpec {
        num_nodes: n,
        num_classes: c,
        feature_dim,
        target_homophily: h,
        mean_degree,
        feature_signal_strength: s,
        rng_seed,
    } = *spec;
    if !(0.0..=1.0).contains(&h) {
        return Err(GescError::Generation(format!("target homophily {h} outside [0, 1]")));
    }
    if !(mean_degree >= 1.0) {
        return Err(GescError::Generation(format!("mean degree {mean_degree} < 1")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(GescError::Generation(format!("feature signal strength {s} outside [0, 1]")));
    }
    if c < 1 || n < c || feature_dim == 0 {
        return Err(GescError::Generation(format!("need 1 <= classes <= nodes and feature_dim >= 1 (N={n}, C={c})")));
    }
    let mut rng = rng_for(rng_seed, stream::SYNTHETIC);

    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    labels.shuffle(&mut rng);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }

    let total = libm::round(n as f64 * mean_degree / 2.0) as usize;
    let n_intra = libm::round(h * total as f64) as usize;
    let n_inter = total - n_intra;
    let intra_pairs: Vec<usize> = members.iter().map(|m| m.len() * m.len().saturating_sub(1) / 2).collect();
    let intra_capacity: usize = intra_pairs.iter().sum();
    let inter_capacity = n * (n - 1) / 2 - intra_capacity;
    if n_intra > intra_capacity / 2 {
        return Err(GescError::Generation(format!(
            "{n_intra} intra-class edges requested but only {intra_capacity} same-label pairs exist"
        )));
    }
    if n_inter > inter_capacity / 2 {
        return Err(GescError::Generation(format!(
            "{n_inter} cross-class edges requested but only {inter_capacity} cross-label pairs exist"
        )));
    }

    let mut edges = BTreeSet::new();
    let cumulative: Vec<usize> = intra_pairs
        .iter()
        .scan(0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    while edges.len() < n_intra {
        let pick = rng.random_range(0..intra_capacity);
        let class = cumulative.partition_point(|&cum| cum <= pick);
        let m = &members[class];
        let a = m[rng.random_range(0..m.len())];
        let b = m[rng.random_range(0..m.len())];
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let mut inter = 0;
    while inter < n_inter {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if labels[a] != labels[b] && edges.insert((a.min(b), a.max(b))) {
            inter += 1;
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let graph = Graph::new(n, &edges)?;

    let means: Vec<f64> = (0..c * feature_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let noise_scale = libm::sqrt(1.0 - s * s);
    let mut features = Vec::with_capacity(n * feature_dim);
    for &y in &labels {
        for k in 0..feature_dim {
            let eps: f64 = StandardNormal.sample(&mut rng);
            features.push(s * means[y * feature_dim + k] + noise_scale * eps);
        }
    }
    Dataset::new(graph, features, feature_dim, labels, c, Splits::empty(n))
}

/// Keep-mask over undirected edges; each edge survives independently with
/// probability `1 − p_drop`. Dropping an edge removes both of its arcs.
pub fn sample_edge_drop_mask(g: &Graph, p_drop: f64, rng: &mut ChaCha8Rng) -> Result<Vec<bool>> {
    if !(0.0..1.0).contains(&p_drop) {
        return Err(GescError::Parameter("edge drop probability must lie in [0, 1)"));
    }
    Ok((0..g.num_edges()).map(|_| rng.random::<f64>() >= p_drop).collect())
}
