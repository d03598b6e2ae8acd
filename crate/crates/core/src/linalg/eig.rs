use std::cmp::Ordering;

use super::matrix::{ComplexMatrix, C64, ZERO};
use super::LinalgError;

const MAX_SWEEPS: usize = 80;

/// Eigenvalues ascending, eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V diag(f(lambda)) V^dagger`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * f(self.values[k]))
                .sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Unitary 2x2 Jacobi step `G` that diagonalizes `[[app, apq], [conj(apq), aqq]]`
/// under `G^dagger A G`. Returns `(g_pp, g_pq, g_qp, g_qq, t*|apq|)`.
fn rotation(app: f64, aqq: f64, apq: C64) -> (C64, C64, C64, C64, f64) {
    let r = apq.norm();
    let w = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let wc = w.conj();
    (C64::new(c, 0.0), C64::new(s, 0.0), wc * (-s), wc * c, t * r)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Eigenvalues come back ascending. Each eigenvector has its first
/// non-negligible component made real positive, and eigenvectors of
/// (numerically) equal eigenvalues are ordered lexicographically by components.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenSystem, LinalgError> {
    let n = a.dim();
    let scale = a.max_abs();
    let defect = a.hermitian_defect();
    if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) || !a.is_finite() {
        return Err(LinalgError::NonHermitian { defect });
    }
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let frob = m.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let (app, aqq) = (m[(p, p)].re, m[(q, q)].re);
                let (gpp, gpq, gqp, gqq, tr) = rotation(app, aqq, apq);
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = akp * gpp + akq * gqp;
                    m[(k, q)] = akp * gpq + akq * gqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    m[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(app - tr, 0.0);
                m[(q, q)] = C64::new(aqq + tr, 0.0);
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| (m[(k, k)].re, fix_phase(v.column(k))))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let tie = 1e-12 * (1.0 + scale);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= tie {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        start = end;
    }
    let values = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.1).collect();
    Ok(EigenSystem {
        values,
        vectors: ComplexMatrix::from_columns(&cols),
    })
}

fn fix_phase(mut v: Vec<C64>) -> Vec<C64> {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8).copied() {
        let ph = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= ph);
    }
    v
}

fn lex_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            if (p - q).abs() > 1e-9 {
                return q.partial_cmp(&p).unwrap_or(Ordering::Equal);
            }
        }
    }
    Ordering::Equal
}

/// Eigendecomposition of a real symmetric matrix given as rows.
/// Returns ascending eigenvalues and eigenvectors as columns `vecs[i][k]`.
pub fn symmetric_eig(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let m = ComplexMatrix::from_fn(n, |i, j| C64::new(0.5 * (a[i][j] + a[j][i]), 0.0));
    let es = hermitian_eig(&m).expect("symmetrized input is Hermitian");
    let vecs = (0..n)
        .map(|i| (0..n).map(|k| es.vectors[(i, k)].re).collect())
        .collect();
    (es.values, vecs)
}

/// Singular values, descending, by one-sided Jacobi.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut cols = a.columns();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() <= 1e-300 {
                    continue;
                }
                rotated = true;
                let (gpp, gpq, gqp, gqq, _) = rotation(alpha, beta, gamma);
                for k in 0..n {
                    let (x, y) = (cols[p][k], cols[q][k]);
                    cols[p][k] = x * gpp + y * gqp;
                    cols[q][k] = x * gpq + y * gqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|c| super::norm(c)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    s
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    if a.hermitian_defect() <= 1e-12 * a.max_abs() {
        if let Ok(es) = hermitian_eig(a) {
            return es.values.iter().map(|x| x.abs()).sum();
        }
    }
    singular_values(a).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_is_sorted() {
        let a = ComplexMatrix::diag_real(&[3.0, -1.0, 2.0]);
        let es = hermitian_eig(&a).unwrap();
        assert_eq!(es.values, vec![-1.0, 2.0, 3.0]);
        assert_eq!(es.vector(0)[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = ComplexMatrix::from_row_major(
            2,
            vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
        );
        let es = hermitian_eig(&y).unwrap();
        assert!((es.values[0] + 1.0).abs() < 1e-14);
        assert!((es.values[1] - 1.0).abs() < 1e-14);
        assert!((&es.reconstruct() - &y).max_abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::from_real(2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            hermitian_eig(&a),
            Err(LinalgError::NonHermitian { .. })
        ));
    }

    #[test]
    fn trace_norm_of_nilpotent() {
        let a = ComplexMatrix::from_real(2, &[0.0, 2.0, 0.0, 0.0]);
        assert!((trace_norm(&a) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_ties_are_deterministic() {
        let a = ComplexMatrix::identity(3);
        let es = hermitian_eig(&a).unwrap();
        assert_eq!(es.vector(0)[0], C64::new(1.0, 0.0));
        assert_eq!(es.vector(2)[2], C64::new(1.0, 0.0));
    }
}
