//! Dense complex linear algebra.

mod eig;
mod matrix;
pub mod random;
mod takagi;

pub use eig::{hermitian_eig, singular_values, symmetric_eig, trace_norm, EigenSystem};
pub use matrix::{
    inner, kron, kron_vec, norm, normalized, pauli, swap, ComplexMatrix, C64, I, ONE, ZERO,
};
pub use takagi::{takagi_factorize, TakagiFactor};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NonHermitian { defect: f64 },
    #[error("matrix is not a symmetric unitary (defect {defect:e})")]
    NotSymmetricUnitary { defect: f64 },
}

/// Real symmetric matrices are passed around as rows.
pub type RealMatrix = Vec<Vec<f64>>;

/// Inverse of a symmetric positive-definite matrix, `None` if numerically singular.
pub fn spd_inverse(a: &RealMatrix) -> Option<RealMatrix> {
    let n = a.len();
    let (vals, vecs) = symmetric_eig(a);
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if vals.iter().any(|&v| v <= 1e-13 * top) || top == 0.0 {
        return None;
    }
    Some(
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| vecs[i][k] * vecs[j][k] / vals[k]).sum())
                    .collect()
            })
            .collect(),
    )
}
