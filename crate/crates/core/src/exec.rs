//! Parallel/sequential execution switch.
//!
//! With the `parallel` feature (default) the indexed maps below fan out on
//! the ambient rayon pool; without it they compile to plain loops. Every
//! caller derives per-index randomness up front, so both paths produce
//! identical results and dataset outputs are invariant to the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sequential reference path, always available. Benchmarks compare this
/// against the parallel `map_indexed`; tests assert the outputs agree.
pub(crate) fn map_indexed_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Run `job` on a dedicated pool of `workers` threads (0 = rayon default).
///
/// Without the `parallel` feature the job simply runs on the current thread;
/// the knob then has no effect, which is fine because results never depend
/// on it.
#[cfg(feature = "parallel")]
pub fn run_with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return job();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to build worker pool");
    pool.install(job)
}

#[cfg(not(feature = "parallel"))]
pub fn run_with_workers<T>(_workers: usize, job: impl FnOnce() -> T) -> T {
    job()
}
