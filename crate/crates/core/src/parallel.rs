//! Data-parallel fan-out for embarrassingly parallel work (benchmark runs,
//! weight sweeps).
//!
//! With the `parallel` feature (on by default) the work runs on a shared
//! rayon pool; without it everything runs sequentially on the caller's
//! thread with identical results. The `GTF_THREADS` environment variable
//! caps the pool size; unset, empty, or unparsable values fall back to one
//! worker per logical CPU.

/// Parses a thread cap from the textual form of `GTF_THREADS`. `None` means
/// "no explicit cap" (including unparsable or zero values).
fn parse_cap(raw: Option<&str>) -> Option<usize> {
    let text = raw?.trim();
    if text.is_empty() {
        return None;
    }
    match text.parse::<usize>() {
        Ok(0) | Err(_) => None,
        Ok(n) => Some(n),
    }
}

/// Thread cap requested through `GTF_THREADS`, if any.
pub fn thread_cap() -> Option<usize> {
    let raw = std::env::var("GTF_THREADS").ok();
    parse_cap(raw.as_deref())
}

/// Applies `f` to `0..n` and collects the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_parallel(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_sequential(n, f)
    }
}

/// Sequential reference implementation of [`map_indexed`].
pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
mod pool {
    use std::sync::OnceLock;

    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

    /// Shared pool, built once. `GTF_THREADS` is read at first use.
    pub(super) fn get() -> &'static rayon::ThreadPool {
        POOL.get_or_init(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(super::thread_cap().unwrap_or(0))
                .build()
                .expect("thread pool construction cannot fail with these settings")
        })
    }
}

/// Rayon implementation of [`map_indexed`], running on the shared pool.
#[cfg(feature = "parallel")]
pub fn map_indexed_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if n <= 1 {
        // Not worth a pool round-trip.
        return map_indexed_sequential(n, f);
    }
    pool::get().install(|| (0..n).into_par_iter().map(f).collect())
}
