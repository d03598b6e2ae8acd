use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{local_residual, point, verify_gas, Antiunitary, SymmetryError, SymmetryVerdict};
use crate::fisher::real_span_basis;
use crate::linalg::{hermitian_eig, inner, norm, ComplexMatrix, C64};
use crate::model::{Model, StatePoint};

/// Tolerance on the closure of a phase cycle, radians modulo pi.
pub const CYCLE_TOL: f64 = 1e-7;
/// Local invariance of a witness.
pub const LAS_TOL: f64 = 1e-9;

/// Inconsistent loop of the phase constraints: visiting `vertices` in order and
/// closing the loop leaves `mismatch` (mod pi).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCycle {
    pub vertices: Vec<usize>,
    pub mismatch: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum LasOutcome {
    Found {
        witness: Antiunitary,
        residual: f64,
    },
    /// Mixed state: a phase cycle that cannot close.
    CycleObstruction(PhaseCycle),
    /// Pure state: `<d_i rho psi | d_j rho psi>` has a non-vanishing imaginary part.
    ImaginaryOverlap {
        i: usize,
        j: usize,
        value: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl LasOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, LasOutcome::Found { .. })
    }

    pub fn witness(&self) -> Option<&Antiunitary> {
        match self {
            LasOutcome::Found { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

/// `x` reduced to `(-pi/2, pi/2]`.
pub(crate) fn wrap_half(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    if r > PI / 2.0 {
        r - PI
    } else {
        r
    }
}

/// Constraint `psi_j - psi_k = angle (mod pi)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Edge {
    pub j: usize,
    pub k: usize,
    pub angle: f64,
}

pub(crate) fn phase_edges(blocks: &[ComplexMatrix]) -> Vec<Edge> {
    let mut edges = Vec::new();
    for a in blocks {
        let cut = 1e-10 * a.frobenius_norm();
        let d = a.dim();
        for j in 0..d {
            for k in (j + 1)..d {
                let z = a[(j, k)];
                if z.norm() > cut && z.norm() > 0.0 {
                    edges.push(Edge {
                        j,
                        k,
                        angle: z.arg(),
                    });
                }
            }
        }
    }
    edges
}

/// Spanning-forest propagation. Returns phases, or the first cycle that fails to close.
pub(crate) fn propagate(d: usize, edges: &[Edge]) -> Result<Vec<f64>, PhaseCycle> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![vec![]; d];
    for (e, edge) in edges.iter().enumerate() {
        adj[edge.j].push((edge.k, e));
        adj[edge.k].push((edge.j, e));
    }
    let mut psi = vec![0.0; d];
    let mut parent: Vec<Option<usize>> = vec![None; d];
    let mut seen = vec![false; d];
    let mut tree_edge = vec![false; edges.len()];
    for root in 0..d {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                parent[v] = Some(u);
                tree_edge[e] = true;
                let edge = edges[e];
                psi[v] = if edge.j == u {
                    psi[u] - edge.angle
                } else {
                    psi[u] + edge.angle
                };
                queue.push_back(v);
            }
        }
    }
    for (e, edge) in edges.iter().enumerate() {
        if tree_edge[e] {
            continue;
        }
        let mismatch = wrap_half(psi[edge.j] - psi[edge.k] - edge.angle);
        if mismatch.abs() > CYCLE_TOL {
            return Err(PhaseCycle {
                vertices: tree_path(&parent, edge.j, edge.k),
                mismatch,
            });
        }
    }
    Ok(psi.iter().map(|&p| wrap_half(p)).collect())
}

/// Tree path from `a` to `b`.
fn tree_path(parent: &[Option<usize>], a: usize, b: usize) -> Vec<usize> {
    let up = |mut v: usize| {
        let mut p = vec![v];
        while let Some(u) = parent[v] {
            p.push(u);
            v = u;
        }
        p
    };
    let (pa, pb) = (up(a), up(b));
    let lca = *pa.iter().find(|v| pb.contains(v)).expect("same component");
    let mut path: Vec<usize> = pa.iter().copied().take_while(|&v| v != lca).collect();
    path.push(lca);
    let tail: Vec<usize> = pb.iter().copied().take_while(|&v| v != lca).collect();
    path.extend(tail.into_iter().rev());
    path
}

/// Completes orthonormal vectors to a basis of `C^d`.
fn complete_basis(mut vecs: Vec<Vec<C64>>, d: usize) -> Vec<Vec<C64>> {
    for i in 0..d {
        if vecs.len() == d {
            break;
        }
        let mut v = vec![C64::new(0.0, 0.0); d];
        v[i] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in &vecs {
                let c = inner(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            vecs.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    vecs
}

/// Searches for a conjugation leaving the state and its first derivatives invariant.
///
/// Pure states: succeeds exactly when the overlaps `<d_i rho psi|d_j rho psi>` are real.
/// Mixed states with non-degenerate spectrum: phase propagation in the eigenbasis.
/// Degenerate mixed spectra are reported as inconclusive.
pub fn find_las(point: &StatePoint) -> Result<LasOutcome, SymmetryError> {
    let es = hermitian_eig(&point.rho)?;
    let d = point.dim();
    let rank = es.values.iter().filter(|&&v| v > 1e-10).count();
    if rank == 1 {
        let psi = es.vector(d - 1);
        let mut vecs = vec![psi.clone()];
        vecs.extend(point.partials.iter().map(|dr| dr.mul_vec(&psi)));
        let Some(span) = real_span_basis(&vecs, 1e-9) else {
            let mut worst = (0, 0, 0.0f64);
            for i in 0..point.n_params() {
                for j in 0..point.n_params() {
                    let v = inner(&vecs[i + 1], &vecs[j + 1]).im;
                    if v.abs() > worst.2.abs() {
                        worst = (i, j, v);
                    }
                }
            }
            return Ok(LasOutcome::ImaginaryOverlap {
                i: worst.0,
                j: worst.1,
                value: worst.2,
            });
        };
        let u = ComplexMatrix::from_columns(&complete_basis(span, d));
        return Ok(verified(Antiunitary::new(&u * &u.transpose()), point));
    }
    let gap = es
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if gap <= 1e-9 {
        return Ok(LasOutcome::Inconclusive {
            reason: format!("degenerate mixed spectrum (gap {gap:e})"),
        });
    }
    let v = &es.vectors;
    let vh = v.adjoint();
    let blocks: Vec<ComplexMatrix> = point.partials.iter().map(|dr| &(&vh * dr) * v).collect();
    match propagate(d, &phase_edges(&blocks)) {
        Err(cycle) => Ok(LasOutcome::CycleObstruction(cycle)),
        Ok(psi) => {
            let ph: Vec<C64> = psi.iter().map(|&p| C64::from_polar(1.0, p)).collect();
            let u = v * &ComplexMatrix::diag(&ph);
            Ok(verified(Antiunitary::new(&u * &u.transpose()), point))
        }
    }
}

fn verified(witness: Antiunitary, point: &StatePoint) -> LasOutcome {
    let residual = local_residual(&witness, point);
    let scale = point
        .partials
        .iter()
        .map(|p| p.max_abs())
        .fold(1.0, f64::max);
    if residual <= LAS_TOL * scale {
        LasOutcome::Found { witness, residual }
    } else {
        LasOutcome::Inconclusive {
            reason: format!("witness residual {residual:e} above tolerance"),
        }
    }
}

/// Global search by intersecting local results: the local witness at each
/// anchor is tested on every sample point. Sound (a returned operator is
/// verified) but incomplete, since local witnesses need not be unique.
pub fn find_gas_candidate(
    model: &Model,
    anchors: &[Vec<f64>],
    sample: &[Vec<f64>],
) -> Result<Option<(Antiunitary, SymmetryVerdict)>, SymmetryError> {
    for x in anchors {
        let p = point(model, x)?;
        if let LasOutcome::Found { witness, .. } = find_las(&p)? {
            let verdict = verify_gas(model, &witness, sample)?;
            if verdict.found {
                return Ok(Some((witness, verdict)));
            }
        }
    }
    Ok(None)
}
