//! Execution policy for the data-parallel loops (sampling, moment batches).
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it every policy runs sequentially. Results never depend on the
//! policy: each unit of work derives its inputs from its own index and the
//! outputs are collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can honor [`Execution::Parallel`].
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Evaluates `f(0..len)` and returns the results in index order.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
            _ => (0..len).map(f).collect(),
        }
    }

    /// Fallible variant of [`Execution::map_indexed`]; the error with the
    /// smallest index wins so failures are reproducible too.
    pub fn try_map_indexed<T, E, F>(self, len: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map_indexed(len, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_preserve_order() {
        let seq = Execution::Sequential.map_indexed(1000, |i| i * i);
        let par = Execution::Parallel.map_indexed(1000, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }

    #[test]
    fn first_error_is_reported() {
        let r: Result<Vec<usize>, usize> =
            Execution::Parallel.try_map_indexed(100, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
