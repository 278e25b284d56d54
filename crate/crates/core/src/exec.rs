//! Data-parallel batch helpers.
//!
//! With the `parallel` feature (default) batches fan out over rayon's global
//! pool; without it, or with [`Mode::Sequential`], they run on the calling
//! thread. Results always come back in input order, so output never depends
//! on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
}

impl Mode {
    /// `Parallel` degrades to sequential when the feature is off.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Mode::Parallel
    }
}

pub fn map<T, R, F>(mode: Mode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

pub fn map_range<R, F>(mode: Mode, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..len).map(f).collect()
}

/// Collects `Ok` values in order, or the error of the lowest failing index.
pub fn try_map<T, R, E, F>(mode: Mode, items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(mode, items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = map(Mode::Parallel, &items, |x| x * x);
        let b = map(Mode::Sequential, &items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(map_range(Mode::Parallel, 5, |i| i + 1), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn try_map_reports_first_error() {
        let items = [1, 2, 3, 4];
        let r: Result<Vec<i32>, i32> = try_map(Mode::Parallel, &items, |&x| if x % 2 == 0 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(2));
    }
}
