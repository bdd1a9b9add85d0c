//! Optional data parallelism. With the `parallel` feature and `parallel =
//! true` the closures run on the rayon pool; otherwise in order on the
//! calling thread. Results are always returned in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_indexed<R, F>(parallel: bool, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

pub(crate) fn map_pairs_mut<A, B, R, F>(parallel: bool, a: &mut [A], b: &mut [B], f: F) -> Vec<R>
where
    A: Send,
    B: Send,
    R: Send,
    F: Fn(&mut A, &mut B) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return a.par_iter_mut().zip(b.par_iter_mut()).map(|(x, y)| f(x, y)).collect();
    }
    let _ = parallel;
    a.iter_mut().zip(b.iter_mut()).map(|(x, y)| f(x, y)).collect()
}

/// Whether this build can run work in parallel at all.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
