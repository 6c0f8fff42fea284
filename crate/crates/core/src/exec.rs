//! Sequential / rayon execution switch.
//!
//! Every parallel loop in the crate goes through these helpers so that the
//! two modes can be benchmarked against each other and produce identical
//! output. Work items never share RNG state; each derives its own stream.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon's global pool. Degrades to sequential without the
    /// `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel. Output order is index order.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fills `out[i] = f(i)` and returns the maximum of `g(i, &out[i])`.
pub fn fill_max<T, F, G>(exec: Execution, out: &mut [T], f: F, g: G) -> f64
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    G: Fn(usize, &T) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return out
            .par_iter_mut()
            .enumerate()
            .with_min_len(256)
            .map(|(i, slot)| {
                *slot = f(i);
                g(i, slot)
            })
            .reduce(|| 0.0, f64::max);
    }
    let _ = exec;
    out.iter_mut()
        .enumerate()
        .map(|(i, slot)| {
            *slot = f(i);
            g(i, slot)
        })
        .fold(0.0, f64::max)
}

/// `items.iter_mut().map(f).collect()`, possibly in parallel. Output order is
/// item order.
pub fn map_mut<T, U, F>(exec: Execution, items: &mut [T], f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(&mut T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter_mut().map(f).collect();
    }
    let _ = exec;
    items.iter_mut().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let a = map_range(Execution::Sequential, 1000, |i| (i as f64).sqrt());
        let b = map_range(Execution::Parallel, 1000, |i| (i as f64).sqrt());
        assert_eq!(a, b);

        let mut x = vec![0.0; 1000];
        let mut y = vec![0.0; 1000];
        let mx = fill_max(Execution::Sequential, &mut x, |i| i as f64 * 0.5, |_, v| *v);
        let my = fill_max(Execution::Parallel, &mut y, |i| i as f64 * 0.5, |_, v| *v);
        assert_eq!(x, y);
        assert_eq!(mx, my);
        assert_eq!(mx, 499.5);

        let mut p: Vec<u64> = (0..500).collect();
        let mut q = p.clone();
        let pa = map_mut(Execution::Sequential, &mut p, |v| {
            *v *= 3;
            *v + 1
        });
        let qa = map_mut(Execution::Parallel, &mut q, |v| {
            *v *= 3;
            *v + 1
        });
        assert_eq!(p, q);
        assert_eq!(pa, qa);
    }
}
