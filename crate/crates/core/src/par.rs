//! Data-parallel helpers. With the `parallel` feature (default) these use
//! rayon; without it they run sequentially with the same results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `items.iter().map(f).collect()`, possibly in parallel. Output order
/// matches input order.
#[cfg(feature = "parallel")]
pub fn map<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Sequential reference version, always available.
pub fn map_seq<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Runs `f` on a pool of `jobs` threads (0 = rayon default). Without the
/// `parallel` feature `jobs` is ignored.
#[cfg(feature = "parallel")]
pub fn with_jobs<R: Send, F: FnOnce() -> R + Send>(jobs: usize, f: F) -> R {
    if jobs == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<R: Send, F: FnOnce() -> R + Send>(_jobs: usize, f: F) -> R {
    f()
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let ys = super::map(&xs, |x| x * x);
        assert_eq!(ys, super::map_seq(&xs, |x| x * x));
        assert_eq!(super::with_jobs(2, || super::map(&xs, |x| x + 1))[999], 1000);
    }
}
