//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the helpers fan out over rayon's
//! global pool. Without it, or inside [`sequential_scope`], they run on the
//! calling thread. Results are always returned in index order, so callers
//! that reduce sequentially get bit-identical output either way.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with every helper in this module forced onto the calling thread.
pub fn sequential_scope<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            FORCE_SEQUENTIAL.with(|c| c.set(self.0));
        }
    }
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let _restore = Restore(prev);
    f()
}

/// True when helpers called from this thread will fan out.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Fills `out` chunk by chunk; `f` receives the offset of the chunk.
pub fn fill_chunks<F>(out: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if is_parallel() && out.len() > chunk {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i * chunk, c));
        return;
    }
    for (i, c) in out.chunks_mut(chunk).enumerate() {
        f(i * chunk, c);
    }
}

/// Minimum of `f` over `0..n` split into `blocks` contiguous ranges.
/// Ties resolve to the earliest index, matching a sequential scan.
pub fn min_by_blocks<F>(n: u64, blocks: u64, f: F) -> Option<(u64, f64)>
where
    F: Fn(u64, u64) -> Option<(u64, f64)> + Sync + Send,
{
    let blocks = blocks.clamp(1, n.max(1));
    let step = n.div_ceil(blocks);
    let parts = map_range(blocks as usize, |b| {
        let lo = b as u64 * step;
        let hi = ((b as u64 + 1) * step).min(n);
        if lo >= hi {
            None
        } else {
            f(lo, hi)
        }
    });
    parts.into_iter().flatten().fold(None, |best, cand| match best {
        Some((_, v)) if v <= cand.1 => best,
        _ => Some(cand),
    })
}

/// Runs `f` on a dedicated pool of `workers` threads, so helpers called
/// inside fan out over that pool only. Sequential builds just call `f`.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .expect("thread pool");
        pool.install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_scope_restores_flag() {
        let inside = sequential_scope(is_parallel);
        assert!(!inside);
        assert_eq!(is_parallel(), cfg!(feature = "parallel"));
    }

    #[test]
    fn map_range_preserves_order() {
        let v = map_range(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
        let w = sequential_scope(|| map_range(1000, |i| i * i));
        assert_eq!(v, w);
    }

    #[test]
    fn fill_chunks_covers_everything() {
        let mut out = vec![0.0; 1001];
        fill_chunks(&mut out, 64, |off, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = (off + j) as f64;
            }
        });
        assert!(out.iter().enumerate().all(|(i, &x)| x == i as f64));
    }

    #[test]
    fn min_by_blocks_prefers_first_index_on_ties() {
        let best = min_by_blocks(100, 7, |lo, hi| {
            (lo..hi)
                .map(|i| (i, if i % 10 == 3 { 0.0 } else { 1.0 }))
                .fold(None, |b: Option<(u64, f64)>, c| match b {
                    Some(x) if x.1 <= c.1 => Some(x),
                    _ => Some(c),
                })
        });
        assert_eq!(best, Some((3, 0.0)));
    }
}
