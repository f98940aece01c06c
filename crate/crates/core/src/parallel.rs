//! Worker pool shared by the replication loops.
//!
//! `LDPGOF_THREADS` caps the number of workers; otherwise the pool uses every
//! available core. Results are always collected in trial order, so output
//! does not depend on the worker count.

use std::sync::OnceLock;

use rayon::prelude::*;
use rayon::ThreadPool;

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var("LDPGOF_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to build worker pool")
    })
}

/// Number of workers in the shared pool.
pub fn workers() -> usize {
    pool().current_num_threads()
}

/// `(0..n).map(f)`, evaluated on the shared pool.
pub fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

/// Fallible [`map_trials`]; the first error in trial order wins.
pub fn try_map_trials<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_trials(n, f).into_iter().collect()
}
