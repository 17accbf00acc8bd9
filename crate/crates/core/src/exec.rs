//! Execution strategy for the data-parallel loops.
//!
//! All reductions in this crate are over exact rings (rationals, cyclotomic
//! numbers, residues modulo `p^K`), so the parallel and sequential strategies
//! produce identical values. Without the `parallel` feature,
//! [`Strategy::Parallel`] falls back to sequential iteration.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Sequential,
    #[default]
    Parallel,
}

impl Strategy {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, U, F>(self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to consecutive mutable chunks of `data`; `f` receives the
    /// chunk's starting offset.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i * chunk, c));
            return;
        }
        data.chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i * chunk, c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let seq = Strategy::Sequential.map_range(1000, |i| i * i);
        let par = Strategy::Parallel.map_range(1000, |i| i * i);
        assert_eq!(seq, par);
        let mut a = vec![0usize; 100];
        let mut b = vec![0usize; 100];
        Strategy::Sequential.for_each_chunk_mut(&mut a, 7, |o, c| {
            c.iter_mut().enumerate().for_each(|(i, x)| *x = o + i)
        });
        Strategy::Parallel.for_each_chunk_mut(&mut b, 7, |o, c| {
            c.iter_mut().enumerate().for_each(|(i, x)| *x = o + i)
        });
        assert_eq!(a, b);
    }
}
