//! Training sweeps: depth curves for the full and additive models and the
//! SIC setting grid.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::{GescConfig, SicPosition};
use crate::error::Result;
use crate::graph::{make_splits, Dataset};
use crate::train::train;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Full,
    /// η = 0, ξ ≡ 1, g ≡ 0, θ frozen at 0.
    Additive,
}

/// One training run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub label: String,
    pub config: GescConfig,
    /// Draw fresh splits from the run's seed instead of using the
    /// dataset's own.
    pub resplit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub label: String,
    pub seed: u64,
    pub layers: usize,
    pub eta_sic: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    /// Test accuracy at the best validation epoch.
    pub test_acc: f64,
    pub best_epoch: usize,
    pub epochs: usize,
}

pub fn run_job(data: &Dataset, job: &Job) -> Result<JobResult> {
    let split;
    let data = if job.resplit || !data.has_splits() {
        split = make_splits(data, job.config.train.per_class_train, job.config.train.seed)?;
        &split
    } else {
        data
    };
    let out = train(data, &job.config)?;
    let best = out.best();
    Ok(JobResult {
        label: job.label.clone(),
        seed: job.config.train.seed,
        layers: job.config.model.layers,
        eta_sic: job.config.model.eta_sic,
        train_acc: best.train_acc,
        val_acc: best.val_acc,
        test_acc: best.test_acc,
        best_epoch: out.best_epoch,
        epochs: out.history.len(),
    })
}

/// Runs a batch of jobs; results come back in job order.
pub trait Executor {
    fn run(&self, data: &Dataset, jobs: &[Job]) -> Vec<Result<JobResult>>;
}

pub struct Sequential;

impl Executor for Sequential {
    fn run(&self, data: &Dataset, jobs: &[Job]) -> Vec<Result<JobResult>> {
        jobs.iter().map(|j| run_job(data, j)).collect()
    }
}

fn with_seed(cfg: &GescConfig, seed: u64) -> GescConfig {
    let mut c = cfg.clone();
    c.train.seed = seed;
    c
}

/// Jobs labeled `full` / `additive`, one per (mode, depth, seed).
pub fn depth_sweep_jobs(cfg: &GescConfig, depths: &[usize], seeds: &[u64]) -> Vec<Job> {
    let mut jobs = Vec::new();
    for mode in [SweepMode::Full, SweepMode::Additive] {
        for &depth in depths {
            for &seed in seeds {
                let mut c = with_seed(cfg, seed);
                c.model.layers = depth;
                if mode == SweepMode::Additive {
                    c.model = c.model.additive();
                }
                let label = match mode {
                    SweepMode::Full => "full",
                    SweepMode::Additive => "additive",
                };
                jobs.push(Job {
                    label: label.into(),
                    config: c,
                    resplit: true,
                });
            }
        }
    }
    jobs
}

/// `(name, η, ε, rank, position)` of the nine grid settings.
pub const SIC_GRID: [(&str, f64, f64, usize, SicPosition); 9] = [
    ("A1", 0.0, 1e-4, 1, SicPosition::Pre),
    ("A2", 0.25, 1e-4, 1, SicPosition::Pre),
    ("A3", 0.5, 1e-4, 1, SicPosition::Pre),
    ("A4", 0.75, 1e-4, 1, SicPosition::Pre),
    ("A5", 1.0, 1e-4, 1, SicPosition::Pre),
    ("B1", 0.5, 1e-6, 1, SicPosition::Pre),
    ("B2", 0.5, 1e-2, 1, SicPosition::Pre),
    ("C1", 0.5, 1e-4, 1, SicPosition::Post),
    ("C2", 0.5, 1e-4, 4, SicPosition::Pre),
];

/// One job per (grid setting, seed). Rank 4 is capped at the width.
pub fn sic_grid_jobs(cfg: &GescConfig, seeds: &[u64]) -> Vec<Job> {
    let mut jobs = Vec::new();
    for (name, eta, eps, rank, position) in SIC_GRID {
        for &seed in seeds {
            let mut c = with_seed(cfg, seed);
            c.model.eta_sic = eta;
            c.model.epsilon = eps;
            c.model.sic_rank = rank.min(c.model.hidden_dim);
            c.model.sic_position = position;
            jobs.push(Job {
                label: name.into(),
                config: c,
                resplit: true,
            });
        }
    }
    jobs
}

/// Mean test accuracy per η over the `A*` rows, and the best η (the
/// smallest one on ties).
pub fn eta_grid_best(results: &[JobResult]) -> Option<(f64, Vec<(f64, f64)>)> {
    let mut means = Vec::new();
    for (name, eta, ..) in SIC_GRID.iter().filter(|r| r.0.starts_with('A')) {
        let accs: Vec<f64> = results.iter().filter(|r| r.label == *name).map(|r| r.test_acc).collect();
        if accs.is_empty() {
            return None;
        }
        means.push((*eta, accs.iter().sum::<f64>() / accs.len() as f64));
    }
    let best = means.iter().fold(None::<(f64, f64)>, |acc, &(e, m)| match acc {
        Some((_, bm)) if bm >= m => acc,
        _ => Some((e, m)),
    })?;
    Some((best.0, means))
}
