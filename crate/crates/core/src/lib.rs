//! Numerical toolkit for Toeplitz operators on the Bargmann–Fock space with
//! radial and bump-family symbols.

pub mod counterexample;
pub mod heat;
pub mod io;
pub mod irreversibility;
pub mod kernel_tests;
pub mod spectrum;
pub mod numerics;
mod radial;
pub mod symbols;

use rayon::prelude::*;

/// Ordered parallel map; results are assembled in input order so outputs do
/// not depend on the thread count.
pub(crate) fn par_map<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    items.par_iter().map(f).collect()
}
