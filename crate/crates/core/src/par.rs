//! Thin dispatch layer between the rayon and sequential execution paths.
//!
//! Both paths must produce bit-identical results: reductions take a strict
//! total order so the outcome does not depend on evaluation order.

use std::cmp::Ordering;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `0..n` and keep the minimum under `cmp`. `cmp` must be a total order
/// that never returns `Equal` for distinct candidates (include a tie-break
/// key), otherwise the winner would depend on scheduling.
#[cfg(feature = "parallel")]
pub(crate) fn min_by_over<T, M, C>(n: usize, map: M, cmp: C) -> Option<T>
where
    T: Send,
    M: Fn(usize) -> Option<T> + Sync + Send,
    C: Fn(&T, &T) -> Ordering + Sync + Send,
{
    (0..n).into_par_iter().filter_map(map).min_by(cmp)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn min_by_over<T, M, C>(n: usize, map: M, cmp: C) -> Option<T>
where
    M: Fn(usize) -> Option<T>,
    C: Fn(&T, &T) -> Ordering,
{
    (0..n).filter_map(map).min_by(|a, b| match cmp(a, b) {
        // Iterator::min_by keeps the last of equal elements; force first.
        Ordering::Equal => Ordering::Less,
        o => o,
    })
}

/// Map `0..n` into a vector, in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
