//! Data-parallel map helpers with a sequential fallback.
//!
//! With the `parallel` feature (default), [`map_indexed`] and
//! [`try_map_indexed`] fan out over rayon; without it they degrade to the
//! sequential loops below. Call sites write results into per-index slots
//! only, so the output is identical under either execution mode and under
//! any rayon scheduling. The `_seq` variants are always sequential and
//! exist so benchmarks can compare both paths in one build.

/// Maps `f` over `0..n` into a vector, in parallel when enabled.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

/// Sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Fallible map over `0..n`, in parallel when enabled. Returns the first
/// error in index order under sequential execution; under rayon, some
/// error (deterministic inputs still produce a deterministic Ok value).
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        try_map_indexed_seq(n, f)
    }
}

/// Sequential twin of [`try_map_indexed`].
pub fn try_map_indexed_seq<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    F: Fn(usize) -> Result<T, E>,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(100, |i| i * i);
        let b = map_indexed_seq(100, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_propagates_errors() {
        let r: Result<Vec<usize>, String> =
            try_map_indexed(10, |i| if i == 7 { Err("boom".into()) } else { Ok(i) });
        assert!(r.is_err());
    }
}
