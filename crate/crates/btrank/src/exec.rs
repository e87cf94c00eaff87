//! Execution helpers: an order-preserving parallel map with a sequential
//! fallback, and a scoped thread-pool runner. All callers produce identical
//! results whether the `parallel` feature is enabled or not.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving input order in the output. Runs on the
/// rayon pool when `parallel` is true; otherwise (or without the `parallel`
/// feature) runs inline.
#[cfg(feature = "parallel")]
pub(crate) fn run_map<T, R, F>(parallel: bool, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if parallel {
        items.par_iter().map(&f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn run_map<T, R, F>(_parallel: bool, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Runs `f` inside a rayon pool with `threads` workers (`0` = rayon's
/// default). Without the `parallel` feature this just calls `f`. Useful for
/// capping worker counts and for benchmarking the parallel speedup. Builds
/// a pool per call; wrap whole runs, not inner loops.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().expect("failed to build thread pool");
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// True when calls through [`run_map`] may actually fan out.
pub(crate) fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
