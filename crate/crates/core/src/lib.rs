//! Finite-dimensional realizations of commutative and free Jacobi fields.
//!
//! The crate builds smeared field operators `A(φ)` on truncated symmetric
//! (bosonic) and full (free) Fock spaces over a discretized space, computes
//! their vacuum moments, and checks them against three independent routes:
//!
//! * partition sums over set partitions or non-crossing partitions
//!   ([`partitions`]) fed by closed-form cumulants ([`measures`]),
//! * closed-form characteristic, Laplace and free cumulant functionals
//!   ([`measures`]),
//! * Monte Carlo samples of the corresponding white noise on a grid
//!   ([`sampler`]).
//!
//! The one-dimensional correspondence between Jacobi matrices, orthonormal
//! polynomials and spectral measures lives in [`jacobi1d`].

pub mod error;
pub mod exec;
pub mod fields;
pub mod fock;
pub mod jacobi1d;
pub mod json;
pub mod measures;
pub mod partitions;
pub mod quadrature;
pub mod sampler;

pub use error::{Error, Result};
pub use exec::Execution;
