//! Data-parallel fan-out with a sequential fallback.
//!
//! With the default `parallel` feature, independent work items (replicates,
//! restarts, row blocks) run on the rayon pool; without it everything runs
//! sequentially. Results are collected in index order either way, so outputs
//! are identical across both modes and any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..count`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..count`, preserving index order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Always-sequential variant; the benchmark baseline for the parallel path.
pub fn map_indexed_serial<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}
