//! Generalized Darboux transformations for linear spectral problems, built on
//! fundamental integral equations over `(x, +inf)`, `(-inf, x)` and `(0, x)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod darboux;
pub mod error;
pub mod fundamental;
pub mod kernels;
pub mod numerics;
pub mod reference;
pub mod resolvent;
pub mod schrodinger;

pub use error::{Error, Result};

/// Real N×N matrix value of a kernel.
pub type Mat<const N: usize> = nalgebra::SMatrix<f64, N, N>;
