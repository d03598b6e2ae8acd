#![allow(dead_code)]

use imfree::linalg::{ComplexMatrix, RealMatrix};
use imfree::model::Model;
use rand::Rng;

pub fn interior_point<R: Rng>(model: &Model, rng: &mut R) -> Vec<f64> {
    model
        .params
        .iter()
        .map(|p| p.domain.lo + p.domain.width() * rng.random_range(0.05..0.95))
        .collect()
}

pub fn max_diff(a: &RealMatrix, b: &RealMatrix) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn mat_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}

/// Smallest eigenvalue of a real symmetric matrix, via nalgebra.
pub fn min_eig(a: &RealMatrix) -> f64 {
    let n = a.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (a[i][j] + a[j][i]));
    m.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}
