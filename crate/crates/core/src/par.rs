//! Indexed map over sample indices: rayon when the `parallel` feature is on, a plain loop
//! otherwise. Output order is the index order either way.

/// Evaluate `f(scratch, i)` for `i in 0..n` with `workers` threads (0 means all cores).
/// Each worker owns a scratch value built by `init`.
#[cfg(feature = "parallel")]
pub fn map_indexed<S, T, F, I>(n: u64, workers: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 1 {
        return map_sequential(n, init, f);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<S, T, F, I>(n: u64, _workers: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S,
    F: Fn(&mut S, u64) -> T,
{
    map_sequential(n, init, f)
}

/// Single-threaded reference path.
pub fn map_sequential<S, T>(n: u64, init: impl Fn() -> S, f: impl Fn(&mut S, u64) -> T) -> Vec<T> {
    let mut s = init();
    (0..n).map(|i| f(&mut s, i)).collect()
}

/// Whether the crate was built with the rayon backend.
pub const PARALLEL: bool = cfg!(feature = "parallel");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_worker_independence() {
        let f = |s: &mut Vec<u64>, i: u64| {
            s.push(i);
            i * i
        };
        let seq = map_sequential(1000, Vec::new, f);
        for w in [1, 2, 4] {
            assert_eq!(map_indexed(1000, w, Vec::new, f), seq);
        }
    }
}
