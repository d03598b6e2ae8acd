use rand::Rng;
use serde::{Deserialize, Serialize};

use super::las::{phase_edges, propagate};
use super::SymmetryError;
use crate::linalg::{hermitian_eig, trace_norm, ComplexMatrix, C64};
use crate::model::StatePoint;
use crate::optimize::{gradient_descent, nelder_mead};
use crate::rng::stream;

/// Distance of a family from local antiunitary symmetry at one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymmetryReport {
    /// `min (1/n) sum_i |d_i rho - Theta d_i rho Theta^dagger|_F^2`
    pub m_sq: f64,
    /// `min max_i |d_i rho - Theta d_i rho Theta^dagger|_1 / 2`
    pub m1_max: f64,
    /// `min mean_i |d_i rho - Theta d_i rho Theta^dagger|_1 / 2`
    pub m1_mean: f64,
    /// Phases `alpha` (first fixed to 0) of the optimal `Theta = diag(e^{i alpha})` in the eigenbasis.
    pub minimizer: Vec<f64>,
    /// `m1_max` evaluated at the Frobenius minimizer, before its own refinement.
    pub m1_max_at_minimizer: f64,
    pub m1_mean_at_minimizer: f64,
    pub starts: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AsymmetryConfig {
    pub starts: usize,
    pub seed: u64,
}

impl Default for AsymmetryConfig {
    fn default() -> Self {
        Self { starts: 8, seed: 0 }
    }
}

struct Landscape {
    d: usize,
    n: usize,
    blocks: Vec<ComplexMatrix>,
    /// `(j, k, 4|A_jk|^2 / n, 2 arg A_jk)` for `j < k`
    terms: Vec<(usize, usize, f64, f64)>,
}

impl Landscape {
    fn new(blocks: Vec<ComplexMatrix>) -> Self {
        let d = blocks[0].dim();
        let n = blocks.len();
        let mut terms = Vec::new();
        for a in &blocks {
            for j in 0..d {
                for k in (j + 1)..d {
                    let z = a[(j, k)];
                    if z.norm() > 0.0 {
                        terms.push((j, k, 4.0 * z.norm_sqr() / n as f64, 2.0 * z.arg()));
                    }
                }
            }
        }
        Self {
            d,
            n,
            blocks,
            terms,
        }
    }

    fn full(&self, free: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0];
        a.extend_from_slice(free);
        a
    }

    fn value_grad(&self, free: &[f64]) -> (f64, Vec<f64>) {
        let a = self.full(free);
        let mut v = 0.0;
        let mut g = vec![0.0; self.d];
        for &(j, k, w, b2) in &self.terms {
            let t = b2 - a[j] + a[k];
            v += w * (1.0 - t.cos());
            g[j] -= w * t.sin();
            g[k] += w * t.sin();
        }
        (v, g[1..].to_vec())
    }

    fn curvature_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| 2.0 * t.2)
            .sum::<f64>()
            .max(1e-300)
    }

    /// Trace-norm deviations per derivative.
    fn deviations(&self, free: &[f64]) -> Vec<f64> {
        let a = self.full(free);
        let ph: Vec<C64> = a.iter().map(|&x| C64::from_polar(1.0, x)).collect();
        self.blocks
            .iter()
            .map(|b| {
                let t =
                    ComplexMatrix::from_fn(self.d, |j, k| ph[j] * b[(j, k)].conj() * ph[k].conj());
                0.5 * trace_norm(&(b - &t))
            })
            .collect()
    }

    fn m1_max(&self, free: &[f64]) -> f64 {
        self.deviations(free).into_iter().fold(0.0, f64::max)
    }

    fn m1_mean(&self, free: &[f64]) -> f64 {
        self.deviations(free).iter().sum::<f64>() / self.n as f64
    }
}

struct FrobeniusMin {
    land: Landscape,
    minimizer: Vec<f64>,
    m_sq: f64,
    endpoints: Vec<Vec<f64>>,
    starts: usize,
}

fn frobenius_min(
    point: &StatePoint,
    config: AsymmetryConfig,
) -> Result<FrobeniusMin, SymmetryError> {
    let es = hermitian_eig(&point.rho)?;
    let gap = es
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if gap <= 1e-9 {
        return Err(SymmetryError::Degenerate { gap });
    }
    let d = point.dim();
    let v = &es.vectors;
    let vh = v.adjoint();
    let blocks: Vec<ComplexMatrix> = point.partials.iter().map(|dr| &(&vh * dr) * v).collect();
    let edges = phase_edges(&blocks);
    let land = Landscape::new(blocks);

    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; d - 1]];
    let tree = match propagate(d, &edges) {
        Ok(p) => p,
        Err(_) => propagate_ignoring_cycles(d, &edges),
    };
    starts.push(tree[1..].iter().map(|&p| 2.0 * (p - tree[0])).collect());
    let mut rng = stream(config.seed, 0);
    while starts.len() < config.starts.max(8) {
        starts.push(
            (0..d - 1)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect(),
        );
    }

    let step = 1.0 / land.curvature_bound();
    let f = |x: &[f64]| land.value_grad(x);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut endpoints = Vec::with_capacity(starts.len());
    for s in &starts {
        let (x, fx) = gradient_descent(&f, s, step, 1e-13, 20_000);
        if best.as_ref().is_none_or(|b| fx < b.1) {
            best = Some((x.clone(), fx));
        }
        endpoints.push(x);
    }
    let (minimizer, m_sq) = best.expect("at least one start");
    Ok(FrobeniusMin {
        land,
        minimizer,
        m_sq: m_sq.max(0.0),
        endpoints,
        starts: starts.len(),
    })
}

/// Only the Frobenius measure `m_sq`, skipping the trace-norm refinements.
pub fn frobenius_asymmetry(
    point: &StatePoint,
    config: AsymmetryConfig,
) -> Result<f64, SymmetryError> {
    Ok(frobenius_min(point, config)?.m_sq)
}

/// Asymmetry measures over conjugations that fix the (non-degenerate) state.
///
/// Multi-start gradient descent on the Frobenius objective; the starts are the
/// zero phases, the spanning-tree phase assignment, and seeded uniform draws.
/// The minimum is the smallest value, ties going to the earliest start.
pub fn asymmetry_measures(
    point: &StatePoint,
    config: AsymmetryConfig,
) -> Result<AsymmetryReport, SymmetryError> {
    let FrobeniusMin {
        land,
        minimizer,
        m_sq,
        endpoints,
        starts,
    } = frobenius_min(point, config)?;
    let d = point.dim();

    let m1_max_at_minimizer = land.m1_max(&minimizer);
    let m1_mean_at_minimizer = land.m1_mean(&minimizer);
    let refine = |obj: &dyn Fn(&[f64]) -> f64| -> f64 {
        let mut best = obj(&minimizer);
        for x0 in std::iter::once(&minimizer).chain(endpoints.iter()) {
            best = best.min(obj(x0));
        }
        let mut g = |x: &[f64]| obj(x);
        let (_, v) = nelder_mead(&mut g, &minimizer, &vec![0.05; d - 1], 1e-10, 1e-14, 4000);
        best.min(v)
    };
    let m1_max = if d > 1 {
        refine(&|x| land.m1_max(x))
    } else {
        m1_max_at_minimizer
    };
    let m1_mean = if d > 1 {
        refine(&|x| land.m1_mean(x))
    } else {
        m1_mean_at_minimizer
    };
    Ok(AsymmetryReport {
        m_sq,
        m1_max,
        m1_mean,
        minimizer,
        m1_max_at_minimizer,
        m1_mean_at_minimizer,
        starts,
    })
}

/// Tree phases even when some cycle fails: drop the offending edges one at a time.
fn propagate_ignoring_cycles(d: usize, edges: &[super::las::Edge]) -> Vec<f64> {
    let mut kept: Vec<super::las::Edge> = Vec::new();
    for e in edges {
        kept.push(*e);
        if propagate(d, &kept).is_err() {
            kept.pop();
        }
    }
    propagate(d, &kept).unwrap_or_else(|_| vec![0.0; d])
}
