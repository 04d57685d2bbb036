//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Parallelism::Parallel`]
//! dispatches to the rayon pool; without it, every map runs in order on the
//! calling thread. Results are always returned in input order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether maps actually run on the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// `f` applied to every index in `0..n`, in order.
pub fn map_indices<R, F>(mode: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == Parallelism::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// `f` applied to every item, in order.
pub fn map_slice<T, R, F>(mode: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indices(mode, items.len(), |i| f(&items[i]))
}

/// Runs `f` inside a pool of `threads` workers when threads are requested
/// and the parallel feature is enabled; otherwise calls `f` directly.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = map_slice(Parallelism::Sequential, &items, |x| x * x);
        let b = map_slice(Parallelism::Parallel, &items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a[999], 999 * 999);
        assert_eq!(with_threads(Some(2), || 5), 5);
    }
}
