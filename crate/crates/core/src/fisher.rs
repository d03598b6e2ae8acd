//! Symmetric logarithmic derivatives, quantum and classical Fisher information.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eig, symmetric_eig, ComplexMatrix, EigenSystem, RealMatrix, C64};
use crate::model::StatePoint;
use crate::povm::{outcome_distribution, Povm, PovmError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FisherError {
    #[error("state matrix is not Hermitian")]
    NonHermitian,
    #[error("quantum Fisher matrix vanishes identically")]
    SingularQfim { null_directions: Vec<Vec<f64>> },
    #[error("matrix shapes disagree")]
    Shape,
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// SLDs in the gauge that vanishes on the kernel of the state.
#[derive(Clone, Debug)]
pub struct SldSet {
    pub operators: Vec<ComplexMatrix>,
    pub support_projector: ComplexMatrix,
    pub rank: usize,
    /// `max_i |(L_i rho + rho L_i)/2 - d_i rho|_F`
    pub residual: f64,
    pub eigen: EigenSystem,
}

pub fn compute_sld(point: &StatePoint) -> Result<SldSet, FisherError> {
    let es = hermitian_eig(&point.rho).map_err(|_| FisherError::NonHermitian)?;
    let d = point.dim();
    let lmax = es.values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tau = 1e-12 * lmax;
    let v = &es.vectors;
    let vh = v.adjoint();
    let lam = &es.values;
    let operators: Vec<ComplexMatrix> = point
        .partials
        .iter()
        .map(|dr| {
            let a = &(&vh * dr) * v;
            let l = ComplexMatrix::from_fn(d, |j, k| {
                let s = lam[j] + lam[k];
                if s > tau {
                    a[(j, k)] * (2.0 / s)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            (&(v * &l) * &vh).hermitian_part()
        })
        .collect();
    let support: Vec<f64> = lam
        .iter()
        .map(|&l| if l > tau { 1.0 } else { 0.0 })
        .collect();
    let support_projector = (&(v * &ComplexMatrix::diag_real(&support)) * &vh).hermitian_part();
    let rank = support.iter().filter(|&&s| s > 0.0).count();
    let residual = sld_residual(&point.rho, &point.partials, &operators);
    Ok(SldSet {
        operators,
        support_projector,
        rank,
        residual,
        eigen: es,
    })
}

pub fn sld_residual(
    rho: &ComplexMatrix,
    partials: &[ComplexMatrix],
    slds: &[ComplexMatrix],
) -> f64 {
    partials
        .iter()
        .zip(slds)
        .map(|(dr, l)| (&l.anticommutator(rho).scale_re(0.5) - dr).frobenius_norm())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FisherReport {
    pub qfim: RealMatrix,
    /// `Im Tr[rho L_i L_j] / 2`
    pub uhlmann: RealMatrix,
    pub weakly_commutative: bool,
    pub quasi_classical: bool,
    pub partially_commutative: bool,
    /// Absolute tolerance used by the three flags.
    pub tolerance: f64,
    pub rank: usize,
    pub sld_residual: f64,
}

/// `Tr[rho A B]` for Hermitian inputs.
fn tr3(rho: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    (rho * a).trace_product(b)
}

/// `(Re Tr[rho L_i L_j], Im Tr[rho L_i L_j] / 2)` for any choice of SLDs.
pub fn fisher_from_slds(rho: &ComplexMatrix, slds: &[ComplexMatrix]) -> (RealMatrix, RealMatrix) {
    let n = slds.len();
    let mut qfim = vec![vec![0.0; n]; n];
    let mut uhlmann = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let t = tr3(rho, &slds[i], &slds[j]);
            qfim[i][j] = t.re;
            qfim[j][i] = t.re;
            uhlmann[i][j] = t.im / 2.0;
            uhlmann[j][i] = -t.im / 2.0;
        }
    }
    (qfim, uhlmann)
}

pub fn fisher_report(point: &StatePoint) -> Result<FisherReport, FisherError> {
    let sld = compute_sld(point)?;
    let n = point.n_params();
    let (qfim, uhlmann) = fisher_from_slds(&point.rho, &sld.operators);
    let fmax = qfim.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tolerance = 1e-8 * (1.0 + fmax);
    let umax = uhlmann
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    let weakly_commutative = umax <= tolerance;

    let mut comm_max: f64 = 0.0;
    let mut partial_max: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = sld.operators[i].commutator(&sld.operators[j]);
            comm_max = comm_max.max(c.frobenius_norm());
            let pc = &(&sld.support_projector * &c) * &sld.support_projector;
            partial_max = partial_max.max(pc.frobenius_norm());
        }
    }
    let d = point.dim();
    let quasi_classical = if sld.rank == 1 && d > 1 {
        weakly_commutative
            && commuting_pure_slds(point, &sld)
                .map(|ls| {
                    sld_residual(&point.rho, &point.partials, &ls)
                        <= tolerance.max(10.0 * sld.residual)
                })
                .unwrap_or(false)
    } else {
        comm_max <= tolerance
    };
    Ok(FisherReport {
        qfim,
        uhlmann,
        weakly_commutative,
        quasi_classical,
        partially_commutative: partial_max <= tolerance,
        tolerance,
        rank: sld.rank,
        sld_residual: sld.residual,
    })
}

/// For a pure state with real Gram matrix of `{psi, d_i rho psi}`, SLDs that are
/// simultaneously diagonal in a basis of the real span in which every
/// coordinate of `psi` equals `1/sqrt(r)`.
pub fn commuting_pure_slds(point: &StatePoint, sld: &SldSet) -> Option<Vec<ComplexMatrix>> {
    let d = point.dim();
    let psi = sld.eigen.vector(d - 1);
    let mut vecs = vec![psi.clone()];
    vecs.extend(point.partials.iter().map(|dr| dr.mul_vec(&psi)));
    let basis = real_span_basis(&vecs, 1e-9)?;
    let r = basis.len();
    // Coordinates of psi in the basis are real; reflect them onto (1,...,1)/sqrt(r).
    let b: Vec<f64> = basis
        .iter()
        .map(|e| crate::linalg::inner(e, &psi).re)
        .collect();
    let u = vec![1.0 / (r as f64).sqrt(); r];
    let w: Vec<f64> = b.iter().zip(&u).map(|(x, y)| x - y).collect();
    let wn: f64 = w.iter().map(|x| x * x).sum();
    let h = |i: usize, j: usize| {
        let delta = if i == j { 1.0 } else { 0.0 };
        if wn < 1e-30 {
            delta
        } else {
            delta - 2.0 * w[i] * w[j] / wn
        }
    };
    let f: Vec<Vec<C64>> = (0..r)
        .map(|k| {
            (0..d)
                .map(|row| (0..r).map(|j| basis[j][row] * h(j, k)).sum())
                .collect()
        })
        .collect();
    let sqrt_r = (r as f64).sqrt();
    Some(
        point
            .partials
            .iter()
            .map(|dr| {
                let a = dr.mul_vec(&psi);
                let mut l = ComplexMatrix::zeros(d);
                for fk in &f {
                    let alpha = crate::linalg::inner(fk, &a).re;
                    l = &l + &ComplexMatrix::projector(fk).scale_re(2.0 * sqrt_r * alpha);
                }
                l
            })
            .collect(),
    )
}

/// Orthonormal vectors that are real combinations of `vecs`, spanning them,
/// provided their Gram matrix is real (relative tolerance `tol`).
pub fn real_span_basis(vecs: &[Vec<C64>], tol: f64) -> Option<Vec<Vec<C64>>> {
    let m = vecs.len();
    let gram: Vec<Vec<C64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| crate::linalg::inner(&vecs[i], &vecs[j]))
                .collect()
        })
        .collect();
    let scale = gram
        .iter()
        .flatten()
        .fold(0.0f64, |a, z| a.max(z.norm()))
        .max(1e-300);
    if gram.iter().flatten().any(|z| z.im.abs() > tol * scale) {
        return None;
    }
    let real: Vec<Vec<f64>> = gram
        .iter()
        .map(|row| row.iter().map(|z| z.re).collect())
        .collect();
    let (vals, rot) = symmetric_eig(&real);
    let d = vecs[0].len();
    let mut out = Vec::new();
    for k in 0..m {
        if vals[k] <= 1e-12 * scale {
            continue;
        }
        let s = 1.0 / vals[k].sqrt();
        out.push(
            (0..d)
                .map(|row| (0..m).map(|j| vecs[j][row] * rot[j][k] * s).sum())
                .collect(),
        );
    }
    Some(out)
}

/// Classical Fisher matrix of a measurement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cfim {
    pub matrix: RealMatrix,
    /// Some null outcome has a non-negligible derivative.
    pub divergent: bool,
    pub dropped_outcomes: Vec<usize>,
}

pub const PROB_FLOOR: f64 = 1e-12;
pub const NULL_GRADIENT_TOL: f64 = 1e-6;

pub fn cfim(point: &StatePoint, povm: &Povm) -> Result<Cfim, FisherError> {
    let dist = outcome_distribution(point, povm)?;
    let n = point.n_params();
    let mut matrix = vec![vec![0.0; n]; n];
    let mut divergent = false;
    let mut dropped = Vec::new();
    for (k, (p, g)) in dist.probs.iter().zip(&dist.grads).enumerate() {
        if *p <= PROB_FLOOR {
            if g.iter().any(|x| x.abs() > NULL_GRADIENT_TOL) {
                divergent = true;
            }
            dropped.push(k);
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                matrix[i][j] += g[i] * g[j] / p;
            }
        }
    }
    Ok(Cfim {
        matrix,
        divergent,
        dropped_outcomes: dropped,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Efficiency {
    /// Smallest generalized eigenvalue of `(F_C, F_Q)` on the range of `F_Q`.
    pub efficiency: f64,
    /// `F_C[i][i] / F_Q[i][i]`, `NaN` where `F_Q[i][i]` vanishes.
    pub per_parameter: Vec<f64>,
    /// Directions in the kernel of `F_Q`.
    pub null_directions: Vec<Vec<f64>>,
}

pub fn qcrb_efficiency(f_c: &RealMatrix, f_q: &RealMatrix) -> Result<Efficiency, FisherError> {
    let n = f_q.len();
    if f_c.len() != n || f_c.iter().chain(f_q).any(|r| r.len() != n) {
        return Err(FisherError::Shape);
    }
    let (vals, vecs) = symmetric_eig(f_q);
    let top = vals.iter().fold(0.0f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..n)
        .filter(|&k| vals[k] > 1e-10 * top.max(1e-300) && top > 0.0)
        .collect();
    let null_directions: Vec<Vec<f64>> = (0..n)
        .filter(|k| !keep.contains(k))
        .map(|k| (0..n).map(|i| vecs[i][k]).collect())
        .collect();
    if keep.is_empty() {
        return Err(FisherError::SingularQfim { null_directions });
    }
    let r = keep.len();
    // T = L^{-1/2} V_r^T F_C V_r L^{-1/2}
    let t: RealMatrix = (0..r)
        .map(|a| {
            (0..r)
                .map(|b| {
                    let (ka, kb) = (keep[a], keep[b]);
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            s += vecs[i][ka] * f_c[i][j] * vecs[j][kb];
                        }
                    }
                    s / (vals[ka] * vals[kb]).sqrt()
                })
                .collect()
        })
        .collect();
    let (tv, _) = symmetric_eig(&t);
    let per_parameter = (0..n)
        .map(|i| {
            if f_q[i][i].abs() > 1e-300 {
                f_c[i][i] / f_q[i][i]
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(Efficiency {
        efficiency: tv[0],
        per_parameter,
        null_directions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    #[test]
    fn diagonal_qubit_sld() {
        let x: f64 = 0.25;
        let rho = ComplexMatrix::diag_real(&[x, 1.0 - x]);
        let d = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let p = StatePoint::from_matrices(rho, vec![d]);
        let s = compute_sld(&p).unwrap();
        let l = &s.operators[0];
        assert!((l[(0, 0)].re - 4.0).abs() < 1e-12);
        assert!((l[(1, 1)].re + 4.0 / 3.0).abs() < 1e-12);
        let f = fisher_report(&p).unwrap();
        assert!((f.qfim[0][0] - 1.0 / (x * (1.0 - x))).abs() < 1e-10);
    }

    #[test]
    fn single_outcome_has_zero_efficiency() {
        let rho = ComplexMatrix::diag_real(&[0.3, 0.7]);
        let d = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let p = StatePoint::from_matrices(rho, vec![d]);
        let povm = Povm::new(vec![ComplexMatrix::identity(2)], vec!["all".into()]).unwrap();
        let fc = cfim(&p, &povm).unwrap();
        let fq = fisher_report(&p).unwrap().qfim;
        let e = qcrb_efficiency(&fc.matrix, &fq).unwrap();
        assert_eq!(e.efficiency, 0.0);
    }

    #[test]
    fn singular_direction_reported() {
        let fq = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let fc = vec![vec![0.5, 0.0], vec![0.0, 0.0]];
        let e = qcrb_efficiency(&fc, &fq).unwrap();
        assert!((e.efficiency - 0.5).abs() < 1e-14);
        assert_eq!(e.null_directions.len(), 1);
        assert!(e.null_directions[0][1].abs() > 0.99);
    }
}
