//! Data-parallel map with deterministic, input-ordered assembly.

/// How independent work items (momentum blocks, realizations) are evaluated.
///
/// Results are always returned in input order, so any downstream reduction
/// that walks the output sequentially is independent of the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// `workers == 0` uses the global pool size.
    Parallel {
        workers: usize,
    },
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel { workers: 0 }
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// `1` means sequential, `0` means all available cores.
    pub fn with_workers(workers: usize) -> Self {
        match workers {
            1 => Exec::Sequential,
            n => Exec::Parallel { workers: n },
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Exec::Parallel { .. })
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match *self {
            Exec::Sequential => items.iter().map(f).collect(),
            Exec::Parallel { workers } => par_map(workers, items, f),
        }
    }

    /// Fallible map; on failure the error of the first failing item in input
    /// order is returned.
    pub fn try_map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 0 {
        return items.par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(_workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}
