//! Rayon-backed executor for the core crate's parallel jobs.

use rayon::prelude::*;
use roomloc_core::parallel::Parallelism;

/// Runs jobs on the current rayon thread pool. Results are collected in
/// index order, so output is identical to sequential execution.
pub struct RayonParallelism;

impl Parallelism for RayonParallelism {
    fn run<T: Send>(&self, jobs: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..jobs).into_par_iter().map(job).collect()
    }
}

/// A pool bounded to `jobs` threads; `jobs = 1` behaves sequentially.
pub fn bounded_pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool")
}
