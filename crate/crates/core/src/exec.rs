//! Data-parallel helpers with a sequential fallback.
//!
//! Every kernel that loops over independent particles, cells or rows goes
//! through these helpers. With the `parallel` feature disabled,
//! [`Execution::Parallel`] silently runs sequentially, so results never
//! depend on the feature set or the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Minimum number of items handed to one rayon task.
#[cfg(feature = "parallel")]
const MIN_LEN: usize = 256;

/// Applies `f(index, chunk)` to consecutive chunks of `data`.
pub fn for_each_chunk_mut<T, F>(exec: Execution, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(chunk)
            .with_min_len(MIN_LEN.div_ceil(chunk).max(1))
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Fills `out[i] = f(i)`.
pub fn fill_indexed<T, F>(exec: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut()
            .with_min_len(MIN_LEN)
            .enumerate()
            .for_each(|(i, o)| *o = f(i));
        return;
    }
    let _ = exec;
    out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
}

/// Maps `f` over `items`, preserving order. Intended for coarse-grained
/// work (independent solves, seeds, parameter sweeps).
pub fn map_collect<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(&f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
