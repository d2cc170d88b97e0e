//! Bounded worker pool with order-preserving maps.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// A fixed number of workers. With one worker everything runs on the
/// calling thread.
pub struct Workers {
    pool: Option<ThreadPool>,
    count: usize,
}

impl Workers {
    pub fn new(count: usize) -> Result<Self> {
        let count = count.max(1);
        let pool = if count == 1 {
            None
        } else {
            Some(
                ThreadPoolBuilder::new()
                    .num_threads(count)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?,
            )
        };
        Ok(Self { pool, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Runs `f` inside the pool, so nested parallel iterators use it too.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    /// `items.map(f)` with results in input order regardless of scheduling.
    pub fn map<I, R, F>(&self, items: &[I], f: F) -> Vec<R>
    where
        I: Sync,
        R: Send,
        F: Fn(usize, &I) -> R + Sync + Send,
    {
        match &self.pool {
            Some(p) => p.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()),
            None => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        for w in [1, 3] {
            let out = Workers::new(w)
                .unwrap()
                .map(&items, |i, x| x * 2 + i as u64);
            assert_eq!(out, items.iter().map(|x| x * 3).collect::<Vec<_>>());
        }
    }
}
