//! Worker-pool abstraction. With the `parallel` feature (default) maps
//! run on a rayon pool sized to the requested worker count; without it
//! everything degrades to sequential iteration. Results are collected
//! in index order, so output never depends on the worker count.

/// Requested degree of parallelism for batch work.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parallelism {
    workers: usize,
}

impl Parallelism {
    /// Run everything on the calling thread.
    pub const fn sequential() -> Self {
        Parallelism { workers: 1 }
    }

    /// Use up to `n` worker threads (clamped to at least 1).
    pub fn with_workers(n: usize) -> Self {
        Parallelism { workers: n.max(1) }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Order-preserving indexed map over `0..n`.
    pub fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.workers > 1 && n > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .expect("failed to build worker pool");
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            let n = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
            Parallelism::with_workers(n)
        }
        #[cfg(not(feature = "parallel"))]
        Parallelism::sequential()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_for_any_worker_count() {
        let seq = Parallelism::sequential().map(100, |i| i * i);
        let par = Parallelism::with_workers(8).map(100, |i| i * i);
        assert_eq!(seq, par);
    }
}
