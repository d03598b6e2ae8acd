//! Antiunitary symmetries of state families.

mod asymmetry;
mod invariant;
mod las;

pub use asymmetry::{asymmetry_measures, frobenius_asymmetry, AsymmetryConfig, AsymmetryReport};
pub use invariant::{invariant_basis, invariant_povm};
pub use las::{find_gas_candidate, find_las, LasOutcome, PhaseCycle, CYCLE_TOL, LAS_TOL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kron, pauli, takagi_factorize, trace_norm, ComplexMatrix, LinalgError, C64};
use crate::model::{evaluate, Model, ModelError, StatePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("antiunitary acts on dimension {got}, state has dimension {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("operator is not a conjugation (defect {defect:e})")]
    NotConjugation { defect: f64 },
    #[error("state spectrum is degenerate (gap {gap:e})")]
    Degenerate { gap: f64 },
    #[error("need at least one copy")]
    NoCopies,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Antiunitary `v -> M conj(v)`, stored by its unitary part `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Antiunitary {
    pub m: ComplexMatrix,
}

impl Antiunitary {
    pub fn new(m: ComplexMatrix) -> Self {
        Self { m }
    }

    /// Complex conjugation in the computational basis.
    pub fn conjugation(dim: usize) -> Self {
        Self::new(ComplexMatrix::identity(dim))
    }

    /// Spin flip `sigma_Y` followed by complex conjugation.
    pub fn spin_flip() -> Self {
        let [_, y, _] = pauli();
        Self::new(y)
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn apply_vector(&self, v: &[C64]) -> Vec<C64> {
        let c: Vec<C64> = v.iter().map(|z| z.conj()).collect();
        self.m.mul_vec(&c)
    }

    /// `Theta A Theta^dagger = M conj(A) M^dagger`
    pub fn apply(&self, a: &ComplexMatrix) -> ComplexMatrix {
        a.conj().conjugate_by(&self.m)
    }

    /// `U Theta`
    pub fn after_unitary(&self, u: &ComplexMatrix) -> Self {
        Self::new(u * &self.m)
    }

    /// `Theta^2 = M conj(M)`
    pub fn square(&self) -> ComplexMatrix {
        &self.m * &self.m.conj()
    }

    /// Distance of `M` from a symmetric unitary.
    pub fn conjugation_defect(&self) -> f64 {
        self.m.symmetric_defect().max(self.m.unitary_defect())
    }

    /// `Theta^2 = I`, equivalently `M` symmetric.
    pub fn is_conjugation(&self) -> bool {
        self.conjugation_defect() <= 1e-10
    }

    /// Orthonormal basis of vectors fixed by the conjugation.
    pub fn reference_basis(&self) -> Result<Vec<Vec<C64>>, SymmetryError> {
        let t = takagi_factorize(&self.m).map_err(|_| SymmetryError::NotConjugation {
            defect: self.conjugation_defect(),
        })?;
        Ok(t.w.columns())
    }
}

pub fn apply_antiunitary(theta: &Antiunitary, a: &ComplexMatrix) -> ComplexMatrix {
    theta.apply(a)
}

/// `Theta_1 (x) Theta_2`
pub fn compose_tensor(a: &Antiunitary, b: &Antiunitary) -> Antiunitary {
    Antiunitary::new(kron(&a.m, &b.m))
}

/// `Theta^{(x) n}`
pub fn tensor_power(a: &Antiunitary, n: usize) -> Antiunitary {
    let mut out = a.clone();
    for _ in 1..n {
        out = compose_tensor(&out, a);
    }
    out
}

/// Invariance test of a candidate operator against sample states.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryVerdict {
    pub found: bool,
    /// `max_x |Theta rho_x Theta^dagger - rho_x|_1 / 2`
    pub residual: f64,
    pub tolerance: f64,
    pub worst_point: Option<Vec<f64>>,
}

pub const GAS_TOL: f64 = 1e-8;

fn invariance_residual(theta: &Antiunitary, rho: &ComplexMatrix) -> f64 {
    0.5 * trace_norm(&(&theta.apply(rho) - rho))
}

/// Checks `Theta rho_x Theta^dagger = rho_x` on the given sample of parameters.
pub fn verify_gas(
    model: &Model,
    theta: &Antiunitary,
    sample: &[Vec<f64>],
) -> Result<SymmetryVerdict, SymmetryError> {
    if theta.dim() != model.dim {
        return Err(SymmetryError::Dimension {
            got: theta.dim(),
            expected: model.dim,
        });
    }
    let mut residual: f64 = 0.0;
    let mut worst_point = None;
    for x in sample {
        model.check_domain(x)?;
        let r = invariance_residual(theta, &model.rho(x));
        if r > residual || worst_point.is_none() {
            residual = residual.max(r);
            worst_point = Some(x.clone());
        }
    }
    Ok(SymmetryVerdict {
        found: residual <= GAS_TOL,
        residual,
        tolerance: GAS_TOL,
        worst_point,
    })
}

/// `max(|Theta rho Theta^dagger - rho|_1, max_i |Theta d_i rho Theta^dagger - d_i rho|_1) / 2`
pub fn local_residual(theta: &Antiunitary, point: &StatePoint) -> f64 {
    std::iter::once(&point.rho)
        .chain(&point.partials)
        .map(|a| invariance_residual(theta, a))
        .fold(0.0, f64::max)
}

/// Evaluated points on a regular grid over the model domain.
pub fn grid_points(model: &Model, per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = model
        .params
        .iter()
        .map(|p| {
            (0..per_axis)
                .map(|k| {
                    let t = if per_axis == 1 {
                        0.5
                    } else {
                        k as f64 / (per_axis - 1) as f64
                    };
                    p.domain.lo + t * p.domain.width()
                })
                .collect()
        })
        .collect();
    let mut out = vec![vec![]];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Evaluates a model at `x` and wraps model errors.
pub(crate) fn point(model: &Model, x: &[f64]) -> Result<StatePoint, SymmetryError> {
    Ok(evaluate(model, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_flip_squares_to_minus_identity() {
        let f = Antiunitary::spin_flip();
        assert!(!f.is_conjugation());
        assert!((&f.square() + &ComplexMatrix::identity(2)).max_abs() < 1e-15);
        assert!(compose_tensor(&f, &f).is_conjugation());
    }

    #[test]
    fn grid_is_cartesian() {
        let m = crate::zoo::spin();
        let g = grid_points(&m, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![0.0, 0.0]);
    }
}
