//! Dense complex-matrix kernel: Hermitian spectra, functional calculus,
//! norms, direct sums, Kronecker products and grid-sampled functions.

mod eigen;
mod grid;
mod matrix;

pub use eigen::{herm_eigen, herm_spectrum, HermitianEigen};
pub use grid::{
    matrix_function, pointwise_product, scalar_calculus, sup_norm, zeros_like, GridFunction,
};
pub use matrix::{CMatrix, C64};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("matrix is not Hermitian: defect {defect:e} exceeds tolerance {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grid sizes differ ({0} vs {1})")]
    GridMismatch(usize, usize),
    #[error("a grid function needs at least two samples, got {0}")]
    GridTooSmall(usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
}
