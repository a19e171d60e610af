//! Pluggable execution of independent jobs.
//!
//! Grid cells and forest trees are independent and sub-seeded, so they can
//! run in any order or in parallel without changing results. This crate is
//! `no_std` and cannot spawn threads itself; callers inject an executor
//! (the companion crate provides a rayon-backed one) and [`Sequential`]
//! is the default.

use alloc::vec::Vec;

pub trait Parallelism {
    /// Runs `job(0..jobs)` and returns the results in index order.
    fn run<T: Send>(&self, jobs: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;
}

/// In-order execution on the calling thread.
pub struct Sequential;

impl Parallelism for Sequential {
    fn run<T: Send>(&self, jobs: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..jobs).map(job).collect()
    }
}
