//! Fast transforms for functions obeying three-term recurrences.
//!
//! The core is a divide-and-conquer eigensolver for symmetric tridiagonal
//! matrices ([`trieig`]) whose eigenvector matrix is applied in
//! `O(n log n)` through a one-dimensional fast multipole method
//! ([`fmm1d`]). On top of it sit Gauss quadrature and orthogonal polynomial
//! transforms ([`orthopoly`]) and Bessel-function zeros and sums
//! ([`bessel`]). [`oracle`] holds slow reference implementations.
//!
//! With the default `parallel` feature, independent subtrees and kernel
//! sums run on the rayon thread pool; without it everything is sequential
//! and produces identical results.

pub mod bench;
pub mod bessel;
pub mod error;
pub mod fmm1d;
pub mod oracle;
pub mod orthopoly;
mod par;
pub mod trieig;

pub use error::{Error, Result};
pub use par::is_parallel;
pub use trieig::{decompose, Side, SpectralTree, TridiagonalSymmetric};
