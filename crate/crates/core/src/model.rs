//! Parametric state families and their evaluation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eig, kron, ComplexMatrix, C64};

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> ComplexMatrix + Send + Sync>;
pub type MatricesFn = Arc<dyn Fn(&[f64]) -> Vec<ComplexMatrix> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<C64> + Send + Sync>;
pub type VectorsFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<C64>> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * self.width().max(1.0);
        x >= self.lo - slack && x <= self.hi + slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub domain: Interval,
    /// Phases: the state is periodic in this parameter with period `domain.width()`.
    pub periodic: bool,
}

impl Parameter {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            domain: Interval::new(lo, hi),
            periodic: false,
        }
    }

    pub fn phase(name: &str) -> Self {
        Self {
            name: name.into(),
            domain: Interval::new(0.0, std::f64::consts::TAU),
            periodic: true,
        }
    }
}

#[derive(Clone)]
pub enum StateRule {
    /// `rho = |psi><psi|`
    Pure {
        psi: VectorFn,
        dpsi: Option<VectorsFn>,
    },
    Mixed {
        rho: MatrixFn,
        drho: Option<MatricesFn>,
    },
}

#[derive(Clone)]
pub struct Model {
    pub name: String,
    pub dim: usize,
    pub params: Vec<Parameter>,
    pub rule: StateRule,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .field("pure", &self.is_pure())
            .finish()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("expected {expected} parameters, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    OutOfDomain {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("state is not a density matrix: {0}")]
    InvalidState(DensityReport),
}

/// Result of checking a candidate density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub valid: bool,
}

impl fmt::Display for DensityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trace defect {:e}, hermiticity defect {:e}, min eigenvalue {:e}",
            self.trace_defect, self.hermiticity_defect, self.min_eigenvalue
        )
    }
}

pub fn validate_density(rho: &ComplexMatrix) -> DensityReport {
    let trace_defect = (rho.trace() - C64::new(1.0, 0.0)).norm();
    let hermiticity_defect = rho.hermitian_defect() / rho.max_abs().max(1.0);
    let min_eigenvalue = if hermiticity_defect <= 1e-10 && rho.is_finite() {
        hermitian_eig(&rho.hermitian_part())
            .map(|e| e.values[0])
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let valid = trace_defect <= 1e-10 && hermiticity_defect <= 1e-10 && min_eigenvalue >= -1e-10;
    DensityReport {
        trace_defect,
        hermiticity_defect,
        min_eigenvalue,
        valid,
    }
}

/// A state together with its parameter derivatives.
#[derive(Clone, Debug)]
pub struct StatePoint {
    pub x: Vec<f64>,
    pub rho: ComplexMatrix,
    pub partials: Vec<ComplexMatrix>,
    /// Per parameter: the finite-difference stencil had to move inside the domain.
    pub stencil_shifted: Vec<bool>,
    pub analytic: bool,
}

impl StatePoint {
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn n_params(&self) -> usize {
        self.partials.len()
    }

    /// Builds a point from explicit matrices.
    pub fn from_matrices(rho: ComplexMatrix, partials: Vec<ComplexMatrix>) -> Self {
        let n = partials.len();
        Self {
            x: vec![0.0; n],
            rho,
            partials,
            stencil_shifted: vec![false; n],
            analytic: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NumericPartials {
    pub partials: Vec<ComplexMatrix>,
    pub stencil_shifted: Vec<bool>,
}

impl Model {
    pub fn pure(
        name: &str,
        dim: usize,
        params: Vec<Parameter>,
        psi: impl Fn(&[f64]) -> Vec<C64> + Send + Sync + 'static,
        dpsi: Option<VectorsFn>,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            params,
            rule: StateRule::Pure {
                psi: Arc::new(psi),
                dpsi,
            },
        }
    }

    pub fn mixed(
        name: &str,
        dim: usize,
        params: Vec<Parameter>,
        rho: impl Fn(&[f64]) -> ComplexMatrix + Send + Sync + 'static,
        drho: Option<MatricesFn>,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            params,
            rule: StateRule::Mixed {
                rho: Arc::new(rho),
                drho,
            },
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.rule, StateRule::Pure { .. })
    }

    pub fn has_analytic_partials(&self) -> bool {
        match &self.rule {
            StateRule::Pure { dpsi, .. } => dpsi.is_some(),
            StateRule::Mixed { drho, .. } => drho.is_some(),
        }
    }

    pub fn domain(&self) -> Vec<Interval> {
        self.params.iter().map(|p| p.domain).collect()
    }

    pub fn with_domain(mut self, i: usize, lo: f64, hi: f64) -> Self {
        self.params[i].domain = Interval::new(lo, hi);
        self.params[i].periodic = false;
        self
    }

    pub fn check_domain(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.n_params() {
            return Err(ModelError::Arity {
                expected: self.n_params(),
                got: x.len(),
            });
        }
        for (p, &v) in self.params.iter().zip(x) {
            if !v.is_finite() || !p.domain.contains(v) {
                return Err(ModelError::OutOfDomain {
                    name: p.name.clone(),
                    value: v,
                    lo: p.domain.lo,
                    hi: p.domain.hi,
                });
            }
        }
        Ok(())
    }

    /// State vector of a pure family.
    pub fn state_vector(&self, x: &[f64]) -> Option<Vec<C64>> {
        match &self.rule {
            StateRule::Pure { psi, .. } => Some(psi(x)),
            StateRule::Mixed { .. } => None,
        }
    }

    /// Raw state rule, no checks.
    pub fn rho(&self, x: &[f64]) -> ComplexMatrix {
        match &self.rule {
            StateRule::Pure { psi, .. } => ComplexMatrix::projector(&psi(x)),
            StateRule::Mixed { rho, .. } => rho(x),
        }
    }

    pub fn analytic_partials(&self, x: &[f64]) -> Option<Vec<ComplexMatrix>> {
        match &self.rule {
            StateRule::Pure { psi, dpsi } => {
                let d = dpsi.as_ref()?;
                let v = psi(x);
                Some(
                    d(x).iter()
                        .map(|dv| &ComplexMatrix::outer(dv, &v) + &ComplexMatrix::outer(&v, dv))
                        .collect(),
                )
            }
            StateRule::Mixed { drho, .. } => drho.as_ref().map(|d| d(x)),
        }
    }

    pub fn default_step(&self, i: usize) -> f64 {
        1e-4 * self.params[i].domain.width().min(1.0)
    }
}

/// Evaluates the state and its partials, validating the density matrix.
pub fn evaluate(model: &Model, x: &[f64]) -> Result<StatePoint, ModelError> {
    model.check_domain(x)?;
    let rho = model.rho(x);
    let report = validate_density(&rho);
    if !report.valid {
        return Err(ModelError::InvalidState(report));
    }
    let n = model.n_params();
    match model.analytic_partials(x) {
        Some(partials) => Ok(StatePoint {
            x: x.to_vec(),
            rho,
            partials,
            stencil_shifted: vec![false; n],
            analytic: true,
        }),
        None => {
            let h: Vec<f64> = (0..n).map(|i| model.default_step(i)).collect();
            let np = numeric_partials(model, x, &h)?;
            Ok(StatePoint {
                x: x.to_vec(),
                rho,
                partials: np.partials,
                stencil_shifted: np.stencil_shifted,
                analytic: false,
            })
        }
    }
}

/// Weights of the 5-point first-derivative stencil at nodes `offset + {-2..2}`,
/// in units of the step, evaluated at 0.
fn stencil_weights(offset: i32) -> [f64; 5] {
    let nodes: Vec<f64> = (-2..=2).map(|k| (k + offset) as f64).collect();
    // Lagrange basis derivatives at 0.
    let mut w = [0.0; 5];
    for j in 0..5 {
        let mut denom = 1.0;
        for m in 0..5 {
            if m != j {
                denom *= nodes[j] - nodes[m];
            }
        }
        let mut num = 0.0;
        for skip in 0..5 {
            if skip == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..5 {
                if m != j && m != skip {
                    prod *= -nodes[m];
                }
            }
            num += prod;
        }
        w[j] = num / denom;
    }
    w
}

/// Fourth-order finite differences. Near a non-periodic boundary the stencil
/// shifts inward and the shift is recorded.
pub fn numeric_partials(
    model: &Model,
    x: &[f64],
    h: &[f64],
) -> Result<NumericPartials, ModelError> {
    model.check_domain(x)?;
    let n = model.n_params();
    let mut partials = Vec::with_capacity(n);
    let mut shifted = vec![false; n];
    for i in 0..n {
        let p = &model.params[i];
        let mut step = h[i].min(p.domain.width() / 4.0);
        if step <= 0.0 {
            step = model.default_step(i);
        }
        let mut offset = 0i32;
        if !p.periodic {
            while offset < 2 && x[i] + (offset - 2) as f64 * step < p.domain.lo {
                offset += 1;
            }
            while offset > -2 && x[i] + (offset + 2) as f64 * step > p.domain.hi {
                offset -= 1;
            }
        }
        shifted[i] = offset != 0;
        let w = stencil_weights(offset);
        let mut acc = ComplexMatrix::zeros(model.dim);
        for (k, wk) in w.iter().enumerate() {
            if *wk == 0.0 {
                continue;
            }
            let mut y = x.to_vec();
            y[i] = x[i] + ((k as i32 - 2) + offset) as f64 * step;
            acc = &acc + &model.rho(&y).scale_re(*wk / step);
        }
        partials.push(acc.hermitian_part());
    }
    Ok(NumericPartials {
        partials,
        stencil_shifted: shifted,
    })
}

/// `rho_a(x_a) (x) rho_b(x_b)` with parameters concatenated.
pub fn product_model(a: &Model, b: &Model) -> Model {
    let na = a.n_params();
    let (a1, b1) = (a.clone(), b.clone());
    let (a2, b2) = (a.clone(), b.clone());
    let mut params = a.params.clone();
    params.extend(b.params.iter().cloned());
    let name = format!("{}*{}", a.name, b.name);
    let drho = if a.has_analytic_partials() && b.has_analytic_partials() {
        let f: MatricesFn = Arc::new(move |x: &[f64]| {
            let (xa, xb) = x.split_at(na);
            let (ra, rb) = (a2.rho(xa), b2.rho(xb));
            let mut out: Vec<ComplexMatrix> = a2
                .analytic_partials(xa)
                .unwrap()
                .iter()
                .map(|d| kron(d, &rb))
                .collect();
            out.extend(
                b2.analytic_partials(xb)
                    .unwrap()
                    .iter()
                    .map(|d| kron(&ra, d)),
            );
            out
        });
        Some(f)
    } else {
        None
    };
    Model::mixed(
        &name,
        a.dim * b.dim,
        params,
        move |x| {
            let (xa, xb) = x.split_at(na);
            kron(&a1.rho(xa), &b1.rho(xb))
        },
        drho,
    )
}
