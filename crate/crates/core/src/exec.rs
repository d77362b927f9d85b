//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) independent work items are
//! mapped over the rayon pool. Without it, or when [`Exec::Sequential`] is
//! requested, everything runs on the calling thread. Results are always
//! returned in input order so reports stay byte-identical across modes.

/// Execution strategy for independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this strategy will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Runs two closures, concurrently when parallel.
    pub fn join<A, B, RA, RB>(self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return rayon::join(a, b);
        }
        (a(), b())
    }

    /// Applies `f` to fixed-size chunks of `data` in place.
    pub fn for_each_chunk<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i * chunk, c));
            return;
        }
        for (i, c) in data.chunks_mut(chunk).enumerate() {
            f(i * chunk, c);
        }
    }

    /// Like [`Exec::for_each_chunk`] over two equally long slices in lockstep.
    pub fn for_each_chunk_pair<T, F>(self, a: &mut [T], b: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T], &mut [T]) + Sync + Send,
    {
        assert_eq!(a.len(), b.len(), "paired slices differ in length");
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            a.par_chunks_mut(chunk)
                .zip(b.par_chunks_mut(chunk))
                .enumerate()
                .for_each(|(i, (ca, cb))| f(i * chunk, ca, cb));
            return;
        }
        for (i, (ca, cb)) in a.chunks_mut(chunk).zip(b.chunks_mut(chunk)).enumerate() {
            f(i * chunk, ca, cb);
        }
    }
}

/// Installs a global pool with `jobs` workers. Returns false if a pool was
/// already configured or the feature is off.
pub fn configure_workers(jobs: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        false
    }
}
