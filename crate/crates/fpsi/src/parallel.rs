//! Thin dispatch layer between the rayon-backed and sequential code paths.
//!
//! Collected results preserve index order in both modes, so reductions that
//! consume them are bitwise deterministic regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential counterpart of [`map_indexed`], kept available in all builds so
/// benchmarks can compare the two paths directly.
pub fn map_indexed_seq<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sums `f` over `0..n` in deterministic index order; the evaluation of `f`
/// itself is farmed out in parallel builds.
pub fn sum_indexed(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    map_indexed(n, f).into_iter().sum()
}
