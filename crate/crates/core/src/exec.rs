//! Indexed map over a range, parallel when the `parallel` feature is on.
//!
//! Closures receive only their index and derive any per-task state from
//! it, so the output is identical for the sequential build, the parallel
//! build, and any rayon pool size. Results are collected in index order;
//! when several tasks fail, the error with the lowest index wins.

#[cfg(feature = "parallel")]
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    use rayon::prelude::*;
    let out: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
    out.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    (0..n).map(f).collect()
}
