use super::matrix::{ComplexMatrix, C64};
use super::LinalgError;

/// `S = W W^T` with `W` unitary.
#[derive(Clone, Debug)]
pub struct TakagiFactor {
    pub w: ComplexMatrix,
}

const TOL: f64 = 1e-10;

/// Takagi factorization of a symmetric unitary matrix.
///
/// Writes `S = A + iB` with commuting real symmetric `A`, `B`, diagonalizes both
/// with one real orthogonal `Q` (joint Jacobi sweeps), and takes square roots of
/// the unimodular diagonal of `Q^T S Q`.
pub fn takagi_factorize(s: &ComplexMatrix) -> Result<TakagiFactor, LinalgError> {
    let defect = s.symmetric_defect().max(s.unitary_defect());
    if !(defect <= TOL) {
        return Err(LinalgError::NotSymmetricUnitary { defect });
    }
    let n = s.dim();
    let mut a: Vec<f64> = (0..n * n)
        .map(|k| 0.5 * (s.entries()[k].re + s[(k % n, k / n)].re))
        .collect();
    let mut b: Vec<f64> = (0..n * n)
        .map(|k| 0.5 * (s.entries()[k].im + s[(k % n, k / n)].im))
        .collect();
    let q = joint_diagonalize(n, &mut a, &mut b);
    let w = ComplexMatrix::from_fn(n, |i, k| {
        let d = C64::new(a[k * n + k], b[k * n + k]);
        let d = d / d.norm();
        C64::new(q[i * n + k], 0.0) * d.sqrt()
    });
    Ok(TakagiFactor { w })
}

/// Jacobi rotations minimizing the joint off-diagonal mass of two real
/// symmetric matrices. Returns the accumulated orthogonal matrix, row-major.
fn joint_diagonalize(n: usize, a: &mut [f64], b: &mut [f64]) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for r in (p + 1)..n {
                let mut g = [0.0; 3];
                for m in [&*a, &*b] {
                    let u0 = m[p * n + r];
                    let u1 = 0.5 * (m[p * n + p] - m[r * n + r]);
                    g[0] += u0 * u0;
                    g[1] += u0 * u1;
                    g[2] += u1 * u1;
                }
                if g[0].sqrt() <= 1e-15 || g[0] <= 1e-32 * (g[0] + g[2]) {
                    continue;
                }
                let half = 0.5 * (g[0] - g[2]);
                let lam = 0.5 * (g[0] + g[2]) - (half * half + g[1] * g[1]).sqrt();
                let e1 = [g[1], lam - g[0]];
                let e2 = [lam - g[2], g[1]];
                let e = if e1[0].hypot(e1[1]) >= e2[0].hypot(e2[1]) {
                    e1
                } else {
                    e2
                };
                let len = e[0].hypot(e[1]);
                if len == 0.0 {
                    continue;
                }
                let (mut cos2, mut sin2) = (e[0] / len, e[1] / len);
                if cos2 < 0.0 {
                    cos2 = -cos2;
                    sin2 = -sin2;
                }
                let c = ((1.0 + cos2) / 2.0).sqrt();
                let s = sin2 / (2.0 * c);
                if s.abs() < 1e-17 {
                    continue;
                }
                rotated = true;
                for m in [&mut *a, &mut *b] {
                    rotate(n, m, p, r, c, s);
                }
                for k in 0..n {
                    let (x, y) = (q[k * n + p], q[k * n + r]);
                    q[k * n + p] = c * x - s * y;
                    q[k * n + r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    q
}

/// `M <- R^T M R` with `R` acting on coordinates `p`, `r`:
/// column p of R is `(c, -s)`, column r is `(s, c)`.
fn rotate(n: usize, m: &mut [f64], p: usize, r: usize, c: f64, s: f64) {
    for k in 0..n {
        let (x, y) = (m[k * n + p], m[k * n + r]);
        m[k * n + p] = c * x - s * y;
        m[k * n + r] = s * x + c * y;
    }
    for k in 0..n {
        let (x, y) = (m[p * n + k], m[r * n + k]);
        m[p * n + k] = c * x - s * y;
        m[r * n + k] = s * x + c * y;
    }
}
