//! Worker pool and deterministic parallel primitives.
//!
//! All reductions run over a fixed chunk decomposition of the index space and
//! combine partial results in chunk order, so numeric results are bitwise
//! identical for any worker count. Chunk boundaries depend only on the block
//! ranges (never on the number of threads).

use std::ops::Range;

use rayon::prelude::*;

/// Rows per parallel chunk. Small enough to keep 2-8 workers busy on
/// mid-sized systems, large enough that task overhead stays negligible.
const CHUNK_ROWS: usize = 2048;

/// A shared-memory stand-in for a fixed set of solver processes.
///
/// `workers == 1` runs everything inline on the calling thread; otherwise work
/// fans out to a dedicated rayon pool of exactly `workers` threads.
pub struct WorkerPool {
    pool: Option<rayon::ThreadPool>,
    workers: usize,
}

impl WorkerPool {
    /// Build a pool with the given worker count. `0` means "use all cores".
    pub fn new(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("failed to build worker pool"),
            )
        } else {
            None
        };
        WorkerPool { pool, workers }
    }

    pub fn serial() -> Self {
        WorkerPool::new(1)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

impl Default for WorkerPool {
    fn default() -> Self {
        WorkerPool::serial()
    }
}

/// Subdivide block ranges into fixed-size chunks. The decomposition is a
/// function of the ranges alone, which is what makes reductions reproducible
/// across worker counts.
pub fn chunk_ranges(block_ranges: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut chunks = Vec::new();
    for r in block_ranges {
        let mut start = r.start;
        while start < r.end {
            let end = (start + CHUNK_ROWS).min(r.end);
            chunks.push(start..end);
            start = end;
        }
    }
    if chunks.is_empty() {
        chunks.push(0..0);
    }
    chunks
}

/// Chunk a plain `0..len` index space.
pub fn chunk_len(len: usize) -> Vec<Range<usize>> {
    chunk_ranges(&[0..len])
}

/// Run `f` on every chunk, writing into the disjoint slice of `out` that the
/// chunk covers. Chunks must be sorted and non-overlapping.
pub fn for_each_chunk_mut<F>(pool: &WorkerPool, chunks: &[Range<usize>], out: &mut [f64], f: F)
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    let mut parts: Vec<(Range<usize>, &mut [f64])> = Vec::with_capacity(chunks.len());
    let mut rest = out;
    let mut consumed = 0usize;
    for c in chunks {
        let (skip, tail) = rest.split_at_mut(c.start - consumed);
        debug_assert!(skip.is_empty() || c.start >= consumed);
        let (mine, tail) = tail.split_at_mut(c.end - c.start);
        parts.push((c.clone(), mine));
        rest = tail;
        consumed = c.end;
    }
    if pool.pool.is_some() {
        pool.install(|| {
            parts
                .into_par_iter()
                .for_each(|(range, slice)| f(range, slice));
        });
    } else {
        for (range, slice) in parts {
            f(range, slice);
        }
    }
}

/// Split a slice into the disjoint spans given by sorted, non-overlapping
/// ranges (gaps between ranges are skipped).
pub fn split_disjoint<'a>(out: &'a mut [f64], spans: &[Range<usize>]) -> Vec<&'a mut [f64]> {
    let mut parts = Vec::with_capacity(spans.len());
    let mut rest = out;
    let mut consumed = 0usize;
    for s in spans {
        let (_, tail) = rest.split_at_mut(s.start - consumed);
        let (mine, tail) = tail.split_at_mut(s.end - s.start);
        parts.push(mine);
        rest = tail;
        consumed = s.end;
    }
    parts
}

/// Run `f` over pre-paired work items (metadata plus a disjoint output
/// slice), in parallel when the pool has more than one worker.
pub fn run_pairs<A, F>(pool: &WorkerPool, pairs: Vec<(A, &mut [f64])>, f: F)
where
    A: Send,
    F: Fn(A, &mut [f64]) + Sync,
{
    if pool.pool.is_some() {
        pool.install(|| {
            pairs.into_par_iter().for_each(|(meta, slice)| f(meta, slice));
        });
    } else {
        for (meta, slice) in pairs {
            f(meta, slice);
        }
    }
}

/// Side-effect-free parallel visit of every chunk.
pub fn for_each_chunk<F>(pool: &WorkerPool, chunks: &[Range<usize>], f: F)
where
    F: Fn(Range<usize>) + Sync + Send,
{
    if pool.pool.is_some() {
        pool.install(|| chunks.par_iter().cloned().for_each(f));
    } else {
        for c in chunks {
            f(c.clone());
        }
    }
}

/// Reduce per-chunk partial sums in chunk order. Each partial is computed by
/// `f`; the combination is sequential so the result never depends on thread
/// scheduling.
pub fn sum_chunks<F>(pool: &WorkerPool, chunks: &[Range<usize>], f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync,
{
    let partials: Vec<f64> = if pool.pool.is_some() {
        pool.install(|| chunks.par_iter().cloned().map(&f).collect())
    } else {
        chunks.iter().cloned().map(f).collect()
    };
    partials.iter().sum()
}

/// Pairwise summation of `a[i] * b[i]` over a slice pair. The recursion
/// structure is fixed by the slice length, independent of threading.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= 64 {
        let mut acc = 0.0;
        for (x, y) in a.iter().zip(b) {
            acc += x * y;
        }
        acc
    } else {
        let mid = a.len() / 2;
        pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
    }
}

/// Deterministic dot product over the chunk decomposition.
pub fn dot(pool: &WorkerPool, chunks: &[Range<usize>], a: &[f64], b: &[f64]) -> f64 {
    sum_chunks(pool, chunks, |r| pairwise_dot(&a[r.clone()], &b[r]))
}

/// Deterministic Euclidean norm.
pub fn norm2(pool: &WorkerPool, chunks: &[Range<usize>], a: &[f64]) -> f64 {
    dot(pool, chunks, a, a).sqrt()
}
