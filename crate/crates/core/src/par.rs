//! Deterministic data-parallel helpers.
//!
//! Work is split into index ranges whose results are collected in index
//! order; reductions over the collected results are sequential. Output is
//! therefore bit-identical for any rayon thread count.

use rayon::prelude::*;

const MIN_LEN: usize = 256;

pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).into_par_iter().with_min_len(MIN_LEN).map(f).collect()
}

/// Concatenates per-row outputs in row order.
pub(crate) fn flat_map_rows<R, F>(rows: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> Vec<R> + Sync + Send,
{
    let parts: Vec<Vec<R>> = (0..rows).into_par_iter().map(f).collect();
    parts.into_iter().flatten().collect()
}

/// Maps disjoint mutable row slices in parallel.
pub(crate) fn for_each_row<T, F>(data: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if row_len == 0 {
        return;
    }
    data.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
}
