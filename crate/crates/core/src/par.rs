//! Data-parallel map helpers with a sequential fallback.
//!
//! Grid sweeps and random-sample batches are embarrassingly parallel: every
//! audit, correlation and table entry is a pure function of its index. With
//! the `parallel` feature (default) these fan out over rayon; without it the
//! same code compiles to plain iterators. The `_seq` variants are always
//! sequential so benchmarks can compare both paths in one build.

/// Map `f` over `0..n`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn indexed_map<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n` (sequential build).
#[cfg(not(feature = "parallel"))]
pub fn indexed_map<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Always-sequential map over `0..n`.
pub fn indexed_map_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Whether this build fans sweeps out over rayon.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i * i) as u64;
        assert_eq!(indexed_map(100, f), indexed_map_seq(100, f));
    }

    #[test]
    fn empty_range() {
        let out: Vec<u8> = indexed_map(0, |_| 0u8);
        assert!(out.is_empty());
    }
}
