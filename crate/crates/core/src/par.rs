//! Data-parallel helpers. With the `parallel` feature the hot loops run on
//! rayon; without it they fall back to sequential iteration. Results are
//! order-preserving either way, so outputs are bitwise identical across
//! thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over indices 0..n, optionally in parallel, preserving order.
pub fn maybe_par_map<R, F>(parallel: bool, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Whether parallel execution is actually available in this build.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let seq = maybe_par_map(false, 100, |i| i * i);
        let par = maybe_par_map(true, 100, |i| i * i);
        assert_eq!(seq, par);
    }
}
