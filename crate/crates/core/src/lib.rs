//! Stable first-order hyperbolic relaxations of high-order scalar evolution
//! equations.
//!
//! A model equation `u_t + sum_j alpha_j d^j u + sigma0 d^m u = 0` is replaced by
//! a first-order system in the variables `q_j ~ d^j u`, `j = 0..m-1`,
//!
//! ```text
//! D q_t + A q_x = B q,     D = diag(1, tau, ..., tau)
//! ```
//!
//! where the coupling between the auxiliary equations is a signed permutation
//! matrix `P`. The crate builds the unique stable choice of `P`, analyses the
//! dispersion relation of the resulting system, and solves original and
//! relaxed equations with a periodic Fourier pseudospectral method.
//!
//! Modules:
//!
//! - [`construction`]: signed permutations, model equations, assembled systems,
//!   and the exhaustive stability census of candidate permutations.
//! - [`dispersion`]: dense complex eigensolver, dispersion branches, stability
//!   sweeps and exact single-mode evolution.
//! - [`spectral`]: periodic grids, model catalog, right-hand sides, time
//!   integrators and the solve driver.
//! - [`harness`]: convergence studies in the relaxation time, censuses and
//!   reproducible preset bundles.
//! - [`cli`]: the `hyperbolize` command-line front end.
//!
//! Index convention: the public API is 0-based throughout. Row `i` and column
//! `j` of a permutation of size `n` correspond to the 1-based entry
//! `p_{i+1, j+1}`. The JSON form of [`construction::SignedPermutation`] stores
//! 1-based targets so documents read like the matrix entries they describe.

pub mod cli;
pub mod construction;
pub mod dispersion;
mod error;
pub mod harness;
pub mod matrix;
pub mod spectral;

pub use error::{Error, Result};

pub use num_complex::Complex64;
