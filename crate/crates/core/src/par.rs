//! Row-level data parallelism.
//!
//! With the `parallel` feature (default) the helpers fan out over rayon's
//! global pool; without it they run sequentially. Results are always
//! collected in index order, and callers draw any randomness before fanning
//! out, so output never depends on the mode or the thread count.
//! [`sequential`] forces the sequential path for one call tree at runtime.

use std::cell::Cell;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with every helper in this module taking the sequential path on
/// the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let before = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(before));
    out
}

#[cfg(feature = "parallel")]
fn fan_out() -> bool {
    !FORCE_SEQUENTIAL.with(Cell::get)
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if fan_out() {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Like [`map_range`] but fails with the error of the lowest failing index.
pub fn try_map_range<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if fan_out() {
        let all: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
        return all.into_iter().collect();
    }
    (0..n).map(f).collect()
}

/// Whether the crate was built with the `parallel` feature.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_index_order() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn try_map_propagates_errors() {
        let r: Result<Vec<usize>, String> =
            try_map_range(10, |i| if i == 7 { Err("seven".into()) } else { Ok(i) });
        assert_eq!(r.unwrap_err(), "seven");
        let r: Result<Vec<usize>, usize> =
            try_map_range(100, |i| if i % 9 == 8 { Err(i) } else { Ok(i) });
        assert_eq!(r.unwrap_err(), 8);
    }

    #[test]
    fn sequential_scope_matches_default() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(sequential(|| map_range(500, f)), map_range(500, f));
        assert!(!FORCE_SEQUENTIAL.with(Cell::get));
    }
}
