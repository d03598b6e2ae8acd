//! Seeded random matrices.

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{inner, norm, ComplexMatrix, C64};

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Gram-Schmidt with one reorthogonalization pass.
fn orthonormalize(cols: &mut [Vec<C64>]) {
    for j in 0..cols.len() {
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let c = inner(&done[k], &rest[0]);
                for (x, y) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= c * y;
                }
            }
        }
        let n = norm(&cols[j]);
        cols[j].iter_mut().for_each(|x| *x /= n);
    }
}

/// Haar-random unitary.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|_| (0..n).map(|_| C64::new(gauss(rng), gauss(rng))).collect())
        .collect();
    orthonormalize(&mut cols);
    ComplexMatrix::from_columns(&cols)
}

/// Haar-random real orthogonal matrix, rows of `f64`.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|_| (0..n).map(|_| C64::new(gauss(rng), 0.0)).collect())
        .collect();
    orthonormalize(&mut cols);
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i].re).collect())
        .collect()
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, |_, _| C64::new(gauss(rng), gauss(rng)));
    g.hermitian_part()
}

/// Random full-rank density matrix `G G^dagger / Tr`.
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, |_, _| C64::new(gauss(rng), gauss(rng)));
    let p = &g * &g.adjoint();
    let t = p.trace().re;
    p.scale_re(1.0 / t).hermitian_part()
}

pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| C64::new(gauss(rng), gauss(rng))).collect();
    let l = norm(&v);
    v.into_iter().map(|x| x / l).collect()
}
