//! Matrix-valued Gegenbauer polynomials.
//!
//! The crate builds the `(2ℓ+1)×(2ℓ+1)` weight `W^(ν)(x) = (1-x²)^(ν-1/2) W_pol(x)`,
//! its LDU factorization, the symmetric differential operators that have the monic
//! orthogonal polynomials `P_n^(ν)` as eigenfunctions, and three independent
//! constructions of `P_n^(ν)`: the explicit three-term recurrence, a matrix
//! hypergeometric series, and the Racah/Gegenbauer expansion obtained by
//! diagonalizing a conjugated operator.
//!
//! Everything numeric is generic over [`Real`], implemented for `f64` and for the
//! quad-precision [`Extended`] type.

#![allow(clippy::needless_range_loop)]

pub mod cache;
pub mod error;
pub mod hyper;
pub mod linalg;
pub mod matpoly;
pub mod mvop;
pub mod operators;
pub mod params;
pub mod quadrature;
pub mod racah;
pub mod real;
pub mod special;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use matpoly::{MatrixPolynomial, Var, WeightedMatrixFunction};
pub use params::WeightParams;
pub use real::{Extended, Precision, Real};
