// Data-parallel helpers. With the `parallel` feature turned off everything
// runs on the calling thread, which is handy for single-thread benchmarks
// and debugging. Results never depend on which path ran.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements the sequential path is used even when the
/// `parallel` feature is on.
pub const MIN_PARALLEL_LEN: usize = 2048;

/// Calls `f(index, &mut out[index])` for every slot.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if out.len() >= MIN_PARALLEL_LEN {
        out.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
        return;
    }
    out.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

/// Maps `0..n` through `f`, preserving index order in the output.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
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

/// Maximum of `f(i)` over `0..n`; `0.0` for an empty range. NaN propagates
/// as NaN.
pub fn max_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    let combine = |a: f64, b: f64| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) };
    #[cfg(feature = "parallel")]
    if n >= MIN_PARALLEL_LEN {
        return (0..n).into_par_iter().map(f).reduce(|| 0.0, combine);
    }
    (0..n).map(f).fold(0.0, combine)
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_matches_sequential() {
        let mut out = vec![0u64; 10_000];
        fill_indexed(&mut out, |i, x| *x = (i as u64).wrapping_mul(2654435761));
        for (i, x) in out.iter().enumerate() {
            assert_eq!(*x, (i as u64).wrapping_mul(2654435761));
        }
    }

    #[test]
    fn max_over_handles_empty_and_nan() {
        assert_eq!(max_over(0, |_| 1.0), 0.0);
        assert_eq!(max_over(5000, |i| i as f64), 4999.0);
        assert!(max_over(3, |i| if i == 1 { f64::NAN } else { 1.0 }).is_nan());
    }

    #[test]
    fn map_range_keeps_order() {
        let v = map_range(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
    }
}
