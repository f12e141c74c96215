//! Chunked data-parallel map with an order-deterministic reduction.
//!
//! Work is split into fixed-size chunks whose boundaries do not depend on the
//! number of threads, and partial results are combined in chunk order, so
//! sequential and parallel execution produce bit-identical output.

/// How chunked work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Runs chunks on the rayon pool; identical to `Sequential` when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
}

/// Number of chunks processed per batch; bounds the memory held by partial results.
const BATCH_CHUNKS: usize = 64;

/// Maps `f` over `0..len` in chunks of `chunk` items and folds the chunk
/// results in index order.
pub fn map_fold_chunks<A, F, G>(mode: ExecMode, len: usize, chunk: usize, map: F, mut fold: G)
where
    A: Send,
    F: Fn(std::ops::Range<usize>) -> A + Sync + Send,
    G: FnMut(A),
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let range_of = |c: usize| c * chunk..((c + 1) * chunk).min(len);
    let mut start = 0;
    while start < n_chunks {
        let end = (start + BATCH_CHUNKS).min(n_chunks);
        let parts = run_batch(mode, start..end, &|c| map(range_of(c)));
        for p in parts {
            fold(p);
        }
        start = end;
    }
}

/// Maps `f` over `0..len`, preserving order.
pub fn map_indexed<A, F>(mode: ExecMode, len: usize, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize) -> A + Sync + Send,
{
    run_batch(mode, 0..len, &f)
}

#[cfg(feature = "parallel")]
fn run_batch<A: Send>(
    mode: ExecMode,
    range: std::ops::Range<usize>,
    f: &(dyn Fn(usize) -> A + Sync),
) -> Vec<A> {
    use rayon::prelude::*;
    match mode {
        ExecMode::Sequential => range.map(f).collect(),
        ExecMode::Parallel => range.into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_batch<A: Send>(
    _mode: ExecMode,
    range: std::ops::Range<usize>,
    f: &(dyn Fn(usize) -> A + Sync),
) -> Vec<A> {
    range.map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_order_is_chunk_order() {
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            let mut seen = Vec::new();
            map_fold_chunks(mode, 1000, 7, |r| r.start, |s| seen.push(s));
            let expected: Vec<usize> = (0..1000).step_by(7).collect();
            assert_eq!(seen, expected);
        }
    }

    #[test]
    fn float_reduction_is_mode_independent() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.37).sin() * 1e3).collect();
        let run = |mode| {
            let mut total = 0.0;
            map_fold_chunks(
                mode,
                xs.len(),
                128,
                |r| xs[r].iter().sum::<f64>(),
                |s| total += s,
            );
            total
        };
        assert_eq!(
            run(ExecMode::Sequential).to_bits(),
            run(ExecMode::Parallel).to_bits()
        );
    }
}
