//! Energy of hidden states per eigenmode band of the symmetric normalized
//! Laplacian `I − D^{-1/2} A D^{-1/2}` (isolated nodes keep a unit
//! diagonal).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::complex::ComplexMatrix;
use crate::config::ModelConfig;
use crate::error::{GescError, Result};
use crate::graph::Graph;
use crate::layer::{layer_forward, LayerParams};
use crate::rng::{rng_for, stream};

/// Dense eigendecomposition is limited to this many nodes.
pub const MAX_SPECTRAL_NODES: usize = 2000;

pub const BANDS: [&str; 3] = ["low", "mid", "high"];

/// Eigenpairs sorted by ascending eigenvalue; `vectors` holds them as
/// columns.
#[derive(Debug, Clone)]
pub struct LaplacianModes {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl LaplacianModes {
    /// Band of eigen-index `k`: `⌊3k/N⌋`.
    pub fn band_of(&self, k: usize) -> usize {
        3 * k / self.eigenvalues.len()
    }
}

pub fn laplacian_modes(graph: &Graph) -> Result<LaplacianModes> {
    let n = graph.num_nodes();
    if n > MAX_SPECTRAL_NODES {
        return Err(GescError::Scope(format!(
            "spectral probe needs a dense {n}×{n} eigendecomposition; limit is {MAX_SPECTRAL_NODES} nodes"
        )));
    }
    if n == 0 {
        return Err(GescError::Scope("spectral probe on an empty graph".into()));
    }
    let deg = graph.degrees();
    let mut lap = DMatrix::<f64>::identity(n, n);
    for &(u, v) in graph.edges() {
        let w = 1.0 / libm::sqrt((deg[u] * deg[v]) as f64);
        lap[(u, v)] -= w;
        lap[(v, u)] -= w;
    }
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(LaplacianModes { eigenvalues, vectors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEnergy {
    pub depth: usize,
    pub eta_sic: f64,
    pub band: String,
    /// Laplacian eigenvalue range `[λ_lo, λ_hi]` of the band.
    pub laplacian_range: (f64, f64),
    /// Same modes labeled by normalized-adjacency eigenvalue `1 − λ`.
    pub adjacency_range: (f64, f64),
    /// `‖U_band^T H‖_F`.
    pub energy: f64,
    /// Share of the total squared energy.
    pub fraction: f64,
}

/// Squared energy per band of `h`.
pub fn band_energies(modes: &LaplacianModes, h: &ComplexMatrix) -> [f64; 3] {
    let (n, d) = (h.rows(), h.cols());
    let mut out = [0.0; 3];
    for k in 0..n {
        let u = modes.vectors.column(k);
        let mut e = 0.0;
        for c in 0..d {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                re += u[i] * h.re()[i * d + c];
                im += u[i] * h.im()[i * d + c];
            }
            e += re * re + im * im;
        }
        out[modes.band_of(k)] += e;
    }
    out
}

/// Runs `depth` freshly initialized layers (seeded identically for both
/// runs) at `η_sic = 0` and `η_sic = 0.5` and records band energies after
/// every layer, depth 0 being the input.
pub fn spectral_notch_probe(graph: &Graph, cfg: &ModelConfig, h0: &ComplexMatrix, depth: usize, seed: u64) -> Result<Vec<BandEnergy>> {
    let modes = laplacian_modes(graph)?;
    let n = graph.num_nodes();
    let ranges: Vec<(f64, f64)> = (0..3)
        .map(|b| {
            let members: Vec<f64> = (0..n).filter(|&k| modes.band_of(k) == b).map(|k| modes.eigenvalues[k]).collect();
            match (members.first(), members.last()) {
                (Some(&lo), Some(&hi)) => (lo, hi),
                _ => (f64::NAN, f64::NAN),
            }
        })
        .collect();
    let mut rows = Vec::new();
    for eta in [0.0, 0.5] {
        let run_cfg = ModelConfig {
            eta_sic: eta,
            layers: depth.max(1),
            ..cfg.clone()
        };
        let mut rng = rng_for(seed, stream::VERIFY);
        let layers: Vec<LayerParams> = (0..depth).map(|_| LayerParams::init(&run_cfg, graph.num_edges(), &mut rng)).collect();
        let mut h = h0.clone();
        for t in 0..=depth {
            if t > 0 {
                h = layer_forward(&layers[t - 1], &run_cfg, graph, &h, None)?.0;
            }
            let e = band_energies(&modes, &h);
            let total: f64 = e.iter().sum();
            for b in 0..3 {
                let (lo, hi) = ranges[b];
                rows.push(BandEnergy {
                    depth: t,
                    eta_sic: eta,
                    band: BANDS[b].into(),
                    laplacian_range: (lo, hi),
                    adjacency_range: (1.0 - hi, 1.0 - lo),
                    energy: libm::sqrt(e[b]),
                    fraction: if total > 0.0 { e[b] / total } else { 0.0 },
                });
            }
        }
    }
    Ok(rows)
}
