//! Measurements: validation, outcome statistics and the pure-state optimality test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eig, inner, norm, ComplexMatrix, C64};
use crate::model::StatePoint;

/// Completeness tolerance for `sum E = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Povm {
    pub elements: Vec<ComplexMatrix>,
    pub labels: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PovmError {
    #[error("empty measurement")]
    Empty,
    #[error("element {index} has dimension {got}, expected {expected}")]
    Dimension {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("invalid measurement: {0:?}")]
    Invalid(PovmReport),
    #[error("outcome {index} has probability {value:e}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("state has rank {rank}, a pure state is required")]
    NotPure { rank: usize },
    #[error("malformed element {index}: {reason}")]
    Malformed { index: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmReport {
    pub completeness_defect: f64,
    pub min_eigenvalues: Vec<f64>,
    pub ranks: Vec<usize>,
    pub valid: bool,
}

pub fn validate_povm(elements: &[ComplexMatrix]) -> PovmReport {
    let d = elements.first().map_or(0, |e| e.dim());
    let mut sum = ComplexMatrix::zeros(d);
    let mut min_eigenvalues = Vec::with_capacity(elements.len());
    let mut ranks = Vec::with_capacity(elements.len());
    let mut hermitian = true;
    for e in elements {
        sum = &sum + e;
        match hermitian_eig(&e.hermitian_part()) {
            Ok(es) if e.hermitian_defect() <= 1e-10 * e.max_abs().max(1.0) => {
                let top = es.values.last().copied().unwrap_or(0.0).abs().max(1e-300);
                min_eigenvalues.push(es.values[0]);
                ranks.push(
                    es.values
                        .iter()
                        .filter(|&&v| v > 1e-10 * top.max(1.0))
                        .count(),
                );
            }
            _ => {
                hermitian = false;
                min_eigenvalues.push(f64::NAN);
                ranks.push(0);
            }
        }
    }
    let completeness_defect = (&sum - &ComplexMatrix::identity(d)).max_abs();
    let valid = hermitian
        && !elements.is_empty()
        && completeness_defect <= COMPLETENESS_TOL
        && min_eigenvalues.iter().all(|&v| v >= -COMPLETENESS_TOL);
    PovmReport {
        completeness_defect,
        min_eigenvalues,
        ranks,
        valid,
    }
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self, PovmError> {
        if elements.is_empty() {
            return Err(PovmError::Empty);
        }
        let d = elements[0].dim();
        for (index, e) in elements.iter().enumerate() {
            if e.dim() != d {
                return Err(PovmError::Dimension {
                    index,
                    got: e.dim(),
                    expected: d,
                });
            }
        }
        let report = validate_povm(&elements);
        if !report.valid {
            return Err(PovmError::Invalid(report));
        }
        Ok(Self { elements, labels })
    }

    /// Rank-one projectors onto the given orthonormal vectors.
    pub fn from_basis(vectors: &[Vec<C64>], prefix: &str) -> Result<Self, PovmError> {
        let elements = vectors
            .iter()
            .map(|v| ComplexMatrix::projector(v))
            .collect();
        let labels = (0..vectors.len()).map(|k| format!("{prefix}{k}")).collect();
        Self::new(elements, labels)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `{E_a (x) F_b}` with labels joined by `|`.
    pub fn tensor(&self, other: &Povm) -> Povm {
        let mut elements = Vec::new();
        let mut labels = Vec::new();
        for (e, la) in self.elements.iter().zip(&self.labels) {
            for (f, lb) in other.elements.iter().zip(&other.labels) {
                elements.push(crate::linalg::kron(e, f));
                labels.push(format!("{la}|{lb}"));
            }
        }
        Povm { elements, labels }
    }

    pub fn to_file(&self) -> PovmFile {
        PovmFile {
            elements: self
                .elements
                .iter()
                .zip(&self.labels)
                .map(|(e, l)| LabeledMatrix {
                    label: l.clone(),
                    dim: e.dim(),
                    data: e.entries().iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &PovmFile) -> Result<Self, PovmError> {
        let mut elements = Vec::with_capacity(file.elements.len());
        for (index, m) in file.elements.iter().enumerate() {
            elements.push(
                m.to_matrix()
                    .map_err(|reason| PovmError::Malformed { index, reason })?,
            );
        }
        let labels = file.elements.iter().map(|m| m.label.clone()).collect();
        Self::new(elements, labels)
    }
}

/// Serialized form: labeled matrices, row-major, entries as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub elements: Vec<LabeledMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledMatrix {
    #[serde(default)]
    pub label: String,
    pub dim: usize,
    pub data: Vec<[f64; 2]>,
}

impl LabeledMatrix {
    pub fn from_matrix(label: &str, m: &ComplexMatrix) -> Self {
        Self {
            label: label.into(),
            dim: m.dim(),
            data: m.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix, String> {
        if self.data.len() != self.dim * self.dim {
            return Err(format!(
                "{} entries for dimension {}",
                self.data.len(),
                self.dim
            ));
        }
        Ok(ComplexMatrix::from_row_major(
            self.dim,
            self.data
                .iter()
                .map(|[re, im]| C64::new(*re, *im))
                .collect(),
        ))
    }
}

/// Outcome probabilities and their parameter gradients `grads[k][i] = d_i p_k`.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
    pub grads: Vec<Vec<f64>>,
}

pub fn outcome_distribution(
    point: &StatePoint,
    povm: &Povm,
) -> Result<OutcomeDistribution, PovmError> {
    if povm.dim() != point.dim() {
        return Err(PovmError::Dimension {
            index: 0,
            got: povm.dim(),
            expected: point.dim(),
        });
    }
    let mut probs = Vec::with_capacity(povm.len());
    let mut grads = Vec::with_capacity(povm.len());
    for (index, e) in povm.elements.iter().enumerate() {
        let mut p = point.rho.trace_product(e).re;
        if p < 0.0 {
            if p >= -1e-12 {
                p = 0.0;
            } else {
                return Err(PovmError::NegativeProbability { index, value: p });
            }
        }
        probs.push(p);
        grads.push(
            point
                .partials
                .iter()
                .map(|d| d.trace_product(e).re)
                .collect(),
        );
    }
    Ok(OutcomeDistribution { probs, grads })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YangReport {
    pub optimal: bool,
    /// Per element: the collinearity condition holds.
    pub per_element: Vec<bool>,
    pub worst_residual: f64,
}

/// Tolerance for the real-collinearity tests.
pub const YANG_TOL: f64 = 1e-7;

/// Necessary and sufficient condition for a measurement to attain the quantum
/// bound on a pure state: for `p = <psi|E|psi> > 0`, `E L_i |psi>` is a real
/// multiple of `E |psi>`; for null outcomes the vectors `E L_i |psi>` are
/// pairwise real-proportional.
pub fn yang_optimality_check(point: &StatePoint, povm: &Povm) -> Result<YangReport, PovmError> {
    let es =
        hermitian_eig(&point.rho.hermitian_part()).map_err(|_| PovmError::NotPure { rank: 0 })?;
    let d = point.dim();
    let rank = es.values.iter().filter(|&&v| v > 1e-10).count();
    if rank != 1 || es.values[d - 1] < 1.0 - 1e-8 {
        return Err(PovmError::NotPure { rank });
    }
    let psi = es.vector(d - 1);
    // On a pure state L_i|psi> = 2 d_i rho |psi> in every gauge.
    let lpsi: Vec<Vec<C64>> = point
        .partials
        .iter()
        .map(|dr| dr.mul_vec(&psi).into_iter().map(|z| z * 2.0).collect())
        .collect();
    let mut per_element = Vec::with_capacity(povm.len());
    let mut worst: f64 = 0.0;
    for e in &povm.elements {
        let epsi = e.mul_vec(&psi);
        let p = inner(&psi, &epsi).re;
        let vs: Vec<Vec<C64>> = lpsi.iter().map(|v| e.mul_vec(v)).collect();
        let mut ok = true;
        if p > 1e-10 {
            for v in &vs {
                let r = real_collinearity_residual(&epsi, v);
                worst = worst.max(r);
                ok &= r <= YANG_TOL;
            }
        } else {
            let scale = vs.iter().map(|v| norm(v)).fold(0.0, f64::max);
            for a in 0..vs.len() {
                for b in (a + 1)..vs.len() {
                    let (u, v) = if norm(&vs[a]) >= norm(&vs[b]) {
                        (&vs[a], &vs[b])
                    } else {
                        (&vs[b], &vs[a])
                    };
                    if norm(u) <= YANG_TOL * scale.max(1e-300) || norm(u) < 1e-300 {
                        continue;
                    }
                    let r = real_collinearity_residual(u, v);
                    worst = worst.max(r);
                    ok &= r <= YANG_TOL;
                }
            }
        }
        per_element.push(ok);
    }
    Ok(YangReport {
        optimal: per_element.iter().all(|&b| b),
        per_element,
        worst_residual: worst,
    })
}

/// Distance of `v / |u|` from the real line through `u / |u|`, relative to
/// `max(|v|/|u|, 1)`.
fn real_collinearity_residual(u: &[C64], v: &[C64]) -> f64 {
    let nu = norm(u);
    let uh: Vec<C64> = u.iter().map(|z| z / nu).collect();
    let xi = inner(&uh, v).re;
    let res: f64 = uh
        .iter()
        .zip(v)
        .map(|(a, b)| (b - a * xi).norm_sqr())
        .sum::<f64>()
        .sqrt();
    res / nu.max(norm(v)).max(1e-300)
}
