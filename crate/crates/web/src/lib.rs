//! Browser demo bindings. The plain functions do the work and are testable natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use std::f64::consts::PI;

use imfree::fisher::fisher_report;
use imfree::model::evaluate;
use imfree::symmetry::{asymmetry_measures, find_las, frobenius_asymmetry, AsymmetryConfig};
use imfree::zoo::{closed_form, make_model, ZooSpec};
use thiserror::Error;
use wasm_bindgen::prelude::*;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("{0}")]
    Core(String),
    #[error("{0} out of range")]
    Range(&'static str),
}

fn core(e: impl std::fmt::Display) -> DemoError {
    DemoError::Core(e.to_string())
}

/// Values per delta in [`phase_curves`].
pub const CURVE_STRIDE: usize = 5;

/// Rows `[delta, gisin, product, printed_bound, qcrb]` of phase variances for
/// depolarized antiparallel spins, `steps + 1` deltas in `[0, delta_max]`.
pub fn phase_curves(
    eta: f64,
    phi: f64,
    delta_max: f64,
    steps: usize,
) -> Result<Vec<f64>, DemoError> {
    if !(0.0..1.0).contains(&delta_max) {
        return Err(DemoError::Range("delta_max"));
    }
    if steps == 0 || eta <= 0.0 || eta >= PI {
        return Err(DemoError::Range("steps or eta"));
    }
    Ok((0..=steps)
        .flat_map(|k| {
            let d = delta_max * k as f64 / steps as f64;
            [
                d,
                1.0 / closed_form::gisin_cfim(eta, phi, d)[1][1],
                1.0 / closed_form::antiparallel_product_cfim(eta, phi, d)[1][1],
                closed_form::fig3_bound(eta, d),
                closed_form::antiparallel_phase_qcrb(eta, d),
            ]
        })
        .collect())
}

/// Values per cell in [`fisher_grid`].
pub const GRID_STRIDE: usize = 3;

fn qubit_model(name: &str, delta: f64) -> Result<imfree::model::Model, DemoError> {
    let spec = match name {
        "spin" | "antiparallel" => ZooSpec::new(name),
        "antiparallel_depolarized" => ZooSpec::new(name).with("delta", delta),
        _ => return Err(DemoError::UnknownModel(name.into())),
    };
    make_model(&spec).map_err(core)
}

/// `[F_ee, F_pp, uhlmann_ep]` on an `n x n` grid of cell centres, eta rows
/// over `(0, pi)` and phi columns over `(0, 2 pi)`.
pub fn fisher_grid(model: &str, delta: f64, n: usize) -> Result<Vec<f64>, DemoError> {
    if !(1..=200).contains(&n) {
        return Err(DemoError::Range("n"));
    }
    let m = qubit_model(model, delta)?;
    let mut out = Vec::with_capacity(n * n * GRID_STRIDE);
    for i in 0..n {
        let eta = PI * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
            let p = evaluate(&m, &[eta, phi]).map_err(core)?;
            let r = fisher_report(&p).map_err(core)?;
            out.extend([r.qfim[0][0], r.qfim[1][1], r.uhlmann[0][1]]);
        }
    }
    Ok(out)
}

fn qutrit_spec(omega: [f64; 3]) -> ZooSpec {
    ZooSpec::new("qutrit_las").with_vec("omega", &omega)
}

/// `[m_sq, m1_max, m1_mean, las_found]` for the qutrit family at `x`.
pub fn qutrit_asymmetry(omega: [f64; 3], x: f64) -> Result<Vec<f64>, DemoError> {
    let m = make_model(&qutrit_spec(omega)).map_err(core)?;
    m.check_domain(&[x]).map_err(core)?;
    let p = evaluate(&m, &[x]).map_err(core)?;
    let a = asymmetry_measures(&p, AsymmetryConfig::default()).map_err(core)?;
    let found = find_las(&p).map_err(core)?.is_found();
    Ok(vec![
        a.m_sq,
        a.m1_max,
        a.m1_mean,
        f64::from(u8::from(found)),
    ])
}

/// `m_sq` over an `n x n` grid of `(omega_13, omega_23)` in `[0, 2 pi)` with
/// `omega_12` fixed; `NaN` where the state is degenerate.
pub fn qutrit_landscape(omega_12: f64, x: f64, n: usize) -> Result<Vec<f64>, DemoError> {
    if !(1..=64).contains(&n) {
        return Err(DemoError::Range("n"));
    }
    let step = 2.0 * PI / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let m = make_model(&qutrit_spec([omega_12, i as f64 * step, j as f64 * step]))
                .map_err(core)?;
            m.check_domain(&[x]).map_err(core)?;
            let p = evaluate(&m, &[x]).map_err(core)?;
            out.push(frobenius_asymmetry(&p, AsymmetryConfig::default()).unwrap_or(f64::NAN));
        }
    }
    Ok(out)
}

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = phaseCurves)]
pub fn phase_curves_js(
    eta: f64,
    phi: f64,
    delta_max: f64,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    phase_curves(eta, phi, delta_max, steps).map_err(js)
}

#[wasm_bindgen(js_name = fisherGrid)]
pub fn fisher_grid_js(model: &str, delta: f64, n: usize) -> Result<Vec<f64>, JsError> {
    fisher_grid(model, delta, n).map_err(js)
}

#[wasm_bindgen(js_name = qutritAsymmetry)]
pub fn qutrit_asymmetry_js(w12: f64, w13: f64, w23: f64, x: f64) -> Result<Vec<f64>, JsError> {
    qutrit_asymmetry([w12, w13, w23], x).map_err(js)
}

#[wasm_bindgen(js_name = qutritLandscape)]
pub fn qutrit_landscape_js(omega_12: f64, x: f64, n: usize) -> Result<Vec<f64>, JsError> {
    qutrit_landscape(omega_12, x, n).map_err(js)
}
