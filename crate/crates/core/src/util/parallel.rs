//! Data-parallel execution helpers with a sequential fallback.
//!
//! Every helper here assigns each output element to exactly one task and the
//! per-element computation runs in a fixed order, so results are bit-identical
//! between the `parallel` feature and the sequential fallback, and independent
//! of thread scheduling. Shared accumulators are limited to exact integer
//! counts, where merge order cannot change the result.

/// Row-chunk granularity for parallel matrix work. Fixed (not thread-count
/// dependent) so the work decomposition itself is deterministic.
pub const ROW_CHUNK: usize = 64;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Applies `f(index, item)` to every element of a mutable slice.
#[cfg(feature = "parallel")]
pub fn for_each_indexed_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    use rayon::prelude::*;
    items
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, item)| f(i, item));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_indexed_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    for (i, item) in items.iter_mut().enumerate() {
        f(i, item);
    }
}

/// Folds `f` over all indices into per-task accumulators and merges them.
///
/// Only valid for exactly associative accumulators (integer counters); merge
/// order is scheduler-dependent under the `parallel` feature.
#[cfg(feature = "parallel")]
pub fn fold_counts<A, F, M>(n: usize, init: impl Fn() -> A + Sync + Send, f: F, merge: M) -> A
where
    A: Send,
    F: Fn(A, usize) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .fold(&init, |acc, i| f(acc, i))
        .reduce(&init, merge)
}

#[cfg(not(feature = "parallel"))]
pub fn fold_counts<A, F, M>(n: usize, init: impl Fn() -> A + Sync + Send, f: F, merge: M) -> A
where
    A: Send,
    F: Fn(A, usize) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let _ = &merge;
    (0..n).fold(init(), f)
}
