//! Dense complex linear algebra at small fixed dimensions.
//!
//! Everything here is a pure function on value inputs. Tensor-structured
//! operations take a [`FactorShape`] describing the factor dimensions of the
//! ambient space, with factor 0 the most significant index.

mod linalg;
mod matrix;
mod tensor;
mod tolerances;

pub use linalg::{eig, eig_with, eigenvalues, eigh, expm, logm_psd, Eigen, HermitianEigen};
pub use matrix::{inner, vec_norm, ComplexMatrix};
pub use tensor::{
    apply_local, apply_local_cols, apply_local_rows, embed, kron, kron_all, kron_vec, partial_trace,
    FactorShape,
};
pub use tolerances::Tolerances;



use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is defective within tolerance (eigenvector condition {condition:.3e})")]
    Defective { condition: f64 },
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("negative eigenvalue {value:.3e} in a positive semidefinite input")]
    NegativeEigenvalue { value: f64 },
    #[error("eigen-solver failed to converge")]
    NoConvergence,
}
