//! Phase-variance curves of the two reference-basis measurements on depolarized
//! antiparallel spins.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::fisher::{cfim, fisher_report, FisherError};
use crate::linalg::RealMatrix;
use crate::model::evaluate;
use crate::zoo::{antiparallel_depolarized, canonical_povm, closed_form, ZooError, ZooSpec};

pub const BASES: [&str; 2] = ["gisin", "antiparallel_product"];

/// The two `(eta, phi)` targets.
pub const TARGETS: [(f64, f64); 2] = [(3.0 * PI / 4.0, PI / 8.0), (3.0 * PI / 4.0, PI / 4.0)];

#[derive(Clone, Debug, Serialize)]
pub struct Fig3Row {
    pub delta: f64,
    pub basis: &'static str,
    pub eta: f64,
    pub phi: f64,
    /// `1 / [F_C]_phiphi` from the numeric CFIM.
    pub dev_phi2: f64,
    /// `1 / (2 (1-delta)^2 sin^2 eta)`.
    pub bound: f64,
    /// `1 / [F_Q]_phiphi` from the numeric QFIM of the depolarized state.
    pub qcrb: f64,
    #[serde(skip)]
    pub cfim: RealMatrix,
    #[serde(skip)]
    pub closed_form: RealMatrix,
}

#[derive(Debug, Error)]
pub enum Fig3Error {
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Fisher(#[from] FisherError),
    #[error("model evaluation failed: {0}")]
    Model(#[from] crate::model::ModelError),
}

/// `delta = 0, 0.01, ..., 0.9`.
pub fn default_deltas() -> Vec<f64> {
    (0..=90).map(|k| k as f64 / 100.0).collect()
}

pub fn fig3_rows(deltas: &[f64]) -> Result<Vec<Fig3Row>, Fig3Error> {
    let povms = BASES
        .iter()
        .map(|b| canonical_povm(b, &ZooSpec::new(b)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(deltas.len() * 4);
    for &delta in deltas {
        let model = antiparallel_depolarized(delta);
        for (basis, povm) in BASES.iter().zip(&povms) {
            for &(eta, phi) in &TARGETS {
                let point = evaluate(&model, &[eta, phi])?;
                let fq = fisher_report(&point)?.qfim;
                let fc = cfim(&point, povm)?.matrix;
                let closed_form = if *basis == "gisin" {
                    closed_form::gisin_cfim(eta, phi, delta)
                } else {
                    closed_form::antiparallel_product_cfim(eta, phi, delta)
                };
                rows.push(Fig3Row {
                    delta,
                    basis,
                    eta,
                    phi,
                    dev_phi2: 1.0 / fc[1][1],
                    bound: closed_form::fig3_bound(eta, delta),
                    qcrb: 1.0 / fq[1][1],
                    cfim: fc,
                    closed_form,
                });
            }
        }
    }
    Ok(rows)
}
