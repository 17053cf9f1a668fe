//! Data-parallel helpers with a sequential fallback.
//!
//! The `parallel` feature selects the rayon implementation; without it every
//! helper runs sequentially. A runtime switch lets benchmarks compare both
//! paths in a single binary. All reductions are deterministic: order-preserving
//! collects, and max-reductions (associative, commutative) for suprema.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential code path at runtime (used by the bench suite).
pub fn set_force_sequential(v: bool) {
    FORCE_SEQUENTIAL.store(v, Ordering::SeqCst);
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Configure the global worker pool. No-op when built without `parallel`.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            // Ignore the error when a pool already exists.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// `(0..n).map(f)` collected in index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Maximum of `f` over `0..n`; `NEG_INFINITY` for an empty range.
pub fn max_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .map(&f)
            .reduce(|| f64::NEG_INFINITY, f64::max);
    }
    (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
}
