//! Thread-pool executor for sweep jobs.

use gesc_core::verify::{run_job, Executor, Job, JobResult};
use gesc_core::{Dataset, Result};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GESC_THREADS";

/// Runs jobs on a dedicated pool. Results keep job order, so output does
/// not depend on the worker count.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    pub fn new(threads: usize) -> Self {
        let pool = ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool");
        Self { pool }
    }

    /// Worker count from `GESC_THREADS`, else the available parallelism.
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn run(&self, data: &Dataset, jobs: &[Job]) -> Vec<Result<JobResult>> {
        self.pool.install(|| jobs.par_iter().map(|j| run_job(data, j)).collect())
    }
}
