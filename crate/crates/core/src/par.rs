//! Ordered data-parallel helpers. Work is split into fixed-size index
//! ranges independent of the thread count, and results come back in range
//! order, so the merged output does not depend on scheduling.

use std::ops::Range;

pub(crate) const CHUNK: u128 = 1 << 14;

pub(crate) fn ranges(count: u128, chunk: u128) -> Vec<Range<u128>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < count {
        let end = (start + chunk).min(count);
        out.push(start..end);
        start = end;
    }
    out
}

pub(crate) fn map_ranges<T, F>(count: u128, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u128>) -> T + Sync + Send,
{
    map_vec(ranges(count, CHUNK), f)
}

#[cfg(feature = "parallel")]
pub(crate) fn map_vec<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_vec<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    items.into_iter().map(f).collect()
}
