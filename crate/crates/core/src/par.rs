//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they are plain iterator loops. Callers only use order-preserving maps and
//! reductions whose merge is exact (see [`crate::sum::ExactSum`]) or
//! order-independent (max), so results never depend on the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, in parallel when enabled. Output order is the
/// index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Like [`map_range`] but hands each worker a reusable scratch value.
pub fn map_range_init<T, S, I, F>(n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map_init(init, f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        (0..n).map(|i| f(&mut s, i)).collect()
    }
}

/// Folds `0..n` into per-worker accumulators and merges them.
///
/// `merge` must be associative and commutative in effect (exact sums, max,
/// set union); the grouping of indices into workers is unspecified.
pub fn fold_range<S, A, I, Z, F, M>(n: usize, init: I, zero: Z, fold: F, merge: M) -> A
where
    A: Send,
    S: Send,
    I: Fn() -> S + Sync + Send,
    Z: Fn() -> A + Sync + Send,
    F: Fn(&mut S, &mut A, usize) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .fold(
                || (init(), zero()),
                |(mut s, mut acc), i| {
                    fold(&mut s, &mut acc, i);
                    (s, acc)
                },
            )
            .map(|(_, acc)| acc)
            .reduce(&zero, &merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &merge;
        let mut s = init();
        let mut acc = zero();
        for i in 0..n {
            fold(&mut s, &mut acc, i);
        }
        acc
    }
}

/// Applies `f` to every element.
pub fn for_each_mut<T, F>(v: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        v.par_iter_mut().for_each(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        v.iter_mut().for_each(f)
    }
}

/// Stable sort; deterministic for any thread count.
pub fn sort_by<T, F>(v: &mut [T], cmp: F)
where
    T: Send,
    F: Fn(&T, &T) -> std::cmp::Ordering + Sync,
{
    #[cfg(feature = "parallel")]
    {
        v.par_sort_by(cmp)
    }
    #[cfg(not(feature = "parallel"))]
    {
        v.sort_by(cmp)
    }
}

/// Runs `f` with at most `threads` workers (`None` keeps the global pool).
///
/// Without the `parallel` feature the limit is ignored.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            None => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Number of workers the current context would use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
