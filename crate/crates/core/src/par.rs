//! Data-parallel map helpers with a sequential fallback.
//!
//! All batch work in this crate funnels through these functions so the
//! `parallel` feature is the single switch between rayon and plain loops.
//! Results are collected in index order, and callers derive per-index RNG
//! streams from the index, so outputs are identical whichever path runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every index in `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_indexed`], kept available in every build so the
/// two paths can be benchmarked against each other.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Maximum of `f` over `0..n`; `f` must be finite-valued.
pub fn max_f64<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).reduce(|| f64::MIN, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::MIN, f64::max)
    }
}

/// Sequential twin of [`max_f64`].
pub fn max_f64_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).fold(f64::MIN, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(100, |i| i * i);
        let b = map_indexed_seq(100, |i| i * i);
        assert_eq!(a, b);
        let ma = max_f64(50, |i| (i as f64 * 0.7).sin());
        let mb = max_f64_seq(50, |i| (i as f64 * 0.7).sin());
        assert_eq!(ma, mb);
    }
}
