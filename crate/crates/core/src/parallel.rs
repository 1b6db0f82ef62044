//! Data-parallel map helper with a sequential fallback.
//!
//! Grid-shaped work (stability maps, basin labeling, batched trajectories)
//! funnels through [`map_indexed`]. With the default `parallel` feature the
//! closure runs on the rayon pool; without it the same closure runs in a
//! plain loop. Output order is by index either way, so results are
//! identical across both builds.

/// Apply `f` to 0..n, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to 0..n, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential twin of [`map_indexed`], always available; the criterion
/// bench uses it as the baseline.
pub fn map_indexed_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i * i) as u64;
        assert_eq!(map_indexed(100, f), map_indexed_seq(100, f));
    }
}
