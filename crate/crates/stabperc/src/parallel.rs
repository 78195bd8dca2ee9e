use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs `f(0..n)` on the rayon pool and returns results in index order, so
/// the output does not depend on the number of workers. `threads = 0` uses
/// the global pool.
pub fn replicate<T, F>(n: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    if threads == 0 {
        return run();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?
        .install(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let f = |k: u64| Ok(stabperc_core::rng::replica_seed(9, k));
        let one = replicate(500, 1, f).unwrap();
        let four = replicate(500, 4, f).unwrap();
        assert_eq!(one, four);
        assert_eq!(one[3], stabperc_core::rng::replica_seed(9, 3));
    }

    #[test]
    fn first_error_is_reported() {
        let r: Result<Vec<u64>> = replicate(10, 2, |k| {
            if k == 7 {
                Err(Error::Runtime("boom".into()))
            } else {
                Ok(k)
            }
        });
        assert_eq!(r.unwrap_err().to_string(), "boom");
    }
}
