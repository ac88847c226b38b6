//! Exact symbolic calculus of formal ħ-differential operators on supermanifolds:
//! graded polynomials, symbols and brackets, BV operators for higher Koszul
//! brackets, and ħ-Fourier duality on odd vector bundles.
//!
//! Every identity is checked by normal-form equality over the Gaussian
//! rationals; there are no tolerances anywhere.

pub mod brackets;
pub mod checks;
pub mod duality;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod hbar_ops;
pub mod koszul;
pub mod random;
pub mod report;
pub mod superalgebra;

pub use error::{Error, Result};
pub use superalgebra::{Chart, Coeff, Parity, Poly, SuperPolynomial};
