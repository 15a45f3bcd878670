//! Execution mode for the document passes.
//!
//! `Sequential` folds documents one at a time and is the reference for
//! determinism. `Parallel` splits the corpus into fixed-size chunks, reduces
//! each chunk on the rayon pool and merges the partial accumulators in chunk
//! order, so its output does not depend on the number of worker threads.

use rayon::prelude::*;

/// Documents per chunk in parallel mode.
pub const CHUNK_DOCS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    Parallel,
}

impl Exec {
    /// `threads <= 1` selects the sequential reference.
    pub fn from_threads(threads: usize) -> Self {
        if threads <= 1 {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }

    /// Map-reduce over `items`. `fold` adds one item into an accumulator,
    /// `merge` combines two accumulators (must be associative).
    pub(crate) fn reduce<T, A, I, F, M>(self, items: &[T], init: I, fold: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &T) + Sync,
        M: Fn(&mut A, A),
    {
        match self {
            Exec::Sequential => {
                let mut acc = init();
                for it in items {
                    fold(&mut acc, it);
                }
                acc
            }
            Exec::Parallel => {
                let parts: Vec<A> = items
                    .par_chunks(CHUNK_DOCS)
                    .map(|chunk| {
                        let mut acc = init();
                        for it in chunk {
                            fold(&mut acc, it);
                        }
                        acc
                    })
                    .collect();
                let mut out = init();
                for p in parts {
                    merge(&mut out, p);
                }
                out
            }
        }
    }

    /// Order-preserving map.
    pub(crate) fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            Exec::Parallel => items.par_iter().map(f).collect(),
        }
    }
}
