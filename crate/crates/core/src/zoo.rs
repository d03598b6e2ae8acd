//! Named state families, their known symmetries and measurement bases.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kron, kron_vec, normalized, pauli, swap, ComplexMatrix, C64, I, ONE, ZERO};
use crate::model::{Model, Parameter, StateRule, VectorsFn};
use crate::povm::{Povm, PovmError};
use crate::symmetry::{tensor_power, Antiunitary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZooError {
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("unknown measurement {0}")]
    UnknownMeasurement(String),
    #[error("parameter {name}: {reason}")]
    BadParam { name: String, reason: String },
    #[error("no known global antiunitary symmetry for {0}")]
    NoKnownGas(String),
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// Value bound to a constructor parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Vector(Vec<f64>),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            ParamValue::Text(t) => f.write_str(t),
        }
    }
}

/// Model name, constructor arguments and optional domain overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZooSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    /// Inner family for `eqs` and `antiparallel_of`.
    #[serde(default)]
    pub inner: Option<Box<ZooSpec>>,
    #[serde(default)]
    pub domain: BTreeMap<String, [f64; 2]>,
}

impl fmt::Display for ZooSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        let mut args: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if let Some(inner) = &self.inner {
            args.push(format!("inner={inner}"));
        }
        if !args.is_empty() {
            write!(f, "({})", args.join(", "))?;
        }
        Ok(())
    }
}

impl ZooSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.into(), ParamValue::Number(v));
        self
    }

    pub fn with_vec(mut self, key: &str, v: &[f64]) -> Self {
        self.params
            .insert(key.into(), ParamValue::Vector(v.to_vec()));
        self
    }

    pub fn with_inner(mut self, inner: ZooSpec) -> Self {
        self.inner = Some(Box::new(inner));
        self
    }

    pub fn with_domain(mut self, param: &str, lo: f64, hi: f64) -> Self {
        self.domain.insert(param.into(), [lo, hi]);
        self
    }

    fn num(&self, key: &str, default: Option<f64>) -> Result<f64, ZooError> {
        match self.params.get(key) {
            Some(ParamValue::Number(v)) => Ok(*v),
            Some(_) => Err(bad(key, "expected a number")),
            None => default.ok_or_else(|| bad(key, "missing")),
        }
    }

    fn vector(&self, key: &str, len: usize, default: &[f64]) -> Result<Vec<f64>, ZooError> {
        match self.params.get(key) {
            Some(ParamValue::Vector(v)) if v.len() == len => Ok(v.clone()),
            Some(_) => Err(bad(key, &format!("expected {len} numbers"))),
            None => Ok(default.to_vec()),
        }
    }

    fn count(&self, key: &str, default: Option<usize>) -> Result<usize, ZooError> {
        let v = self.num(key, default.map(|d| d as f64))?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(bad(key, "expected a positive integer"));
        }
        Ok(v as usize)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ZooError> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(bad(k, "not accepted by this model"));
            }
        }
        Ok(())
    }
}

fn bad(name: &str, reason: &str) -> ZooError {
    ZooError::BadParam {
        name: name.into(),
        reason: reason.into(),
    }
}

/// Names accepted by [`make_model`], with a one-line description.
pub const MODELS: &[(&str, &str)] = &[
    ("spin", "pure qubit on the Bloch sphere, params eta, phi"),
    (
        "off_equator_spin",
        "pure qubit at fixed polar angle c, param phi",
    ),
    (
        "noon",
        "N00N state of N photons in its two-dimensional span, param phi",
    ),
    (
        "superdense",
        "(U (x) I)(sqrt(r)|00> + sqrt(1-r)|11>), U = exp(-i x.sigma)",
    ),
    (
        "magnetometry",
        "N spins, three field components, GHZ superposition with phases dY, dZ",
    ),
    ("antiparallel", "|n> (x) Theta_f |n>, params eta, phi"),
    (
        "antiparallel_depolarized",
        "antiparallel spins mixed with white noise of weight delta",
    ),
    (
        "disc",
        "qubit with Bloch vector f1(x) n1 + f2(x) n2, affine f",
    ),
    (
        "eqs",
        "(|psi>|0> + conj(psi)|1>)/sqrt 2 for a pure inner family",
    ),
    ("qutrit_las", "diag(a,b,c) + x H(omega), param x"),
    ("antiparallel_of", "rho (x) conj(rho) for an inner family"),
];

/// Constructor keys per model, with defaults.
pub const MODEL_ARGS: &[(&str, &str)] = &[
    ("spin", "none"),
    ("off_equator_spin", "c (required)"),
    ("noon", "n (required)"),
    ("superdense", "r (default 0.5)"),
    ("magnetometry", "n (required), delta_y = 0, delta_z = 0"),
    ("antiparallel", "none"),
    ("antiparallel_depolarized", "delta (required)"),
    (
        "disc",
        "n1 = [0,0,1], n2 = [1,0,0], f1 = [0,1,0], f2 = [0,0,1]",
    ),
    ("eqs", "inner model (pure)"),
    (
        "qutrit_las",
        "a = 0.5, b = 0.3, c = 0.2, omega = [w12, w13, w23] = [0.3, 0.5, 1.4]",
    ),
    ("antiparallel_of", "inner model"),
];

/// What [`canonical_gas`] returns, per model.
pub const DOCUMENTED_GAS: &[(&str, &str)] = &[
    ("spin", "none known"),
    ("off_equator_spin", "c = pi/2 only: sigma_z sigma_Y conj"),
    ("noon", "sigma_X conj"),
    ("superdense", "r = 1/2 only: (sigma_Y (x) sigma_Y) conj"),
    (
        "magnetometry",
        "even n with delta_y, delta_z in {0, pi}: sigma_Y^(x)n conj",
    ),
    ("antiparallel", "SWAP (sigma_Y (x) sigma_Y) conj"),
    (
        "antiparallel_depolarized",
        "SWAP (sigma_Y (x) sigma_Y) conj",
    ),
    ("disc", "(m.sigma) sigma_Y conj, m the disc normal"),
    ("eqs", "(I (x) sigma_X) conj"),
    (
        "qutrit_las",
        "omega_13 = omega_12 + omega_23 only: diagonal rephasing then conj",
    ),
    ("antiparallel_of", "SWAP conj"),
];

/// Measurements accepted by [`canonical_povm`].
pub const MEASUREMENTS: &[(&str, &str)] = &[
    (
        "gisin",
        "tetrahedral entangled basis for antiparallel spins",
    ),
    ("antiparallel_product", "i|01>, i|10>, (|00> +- |11>) basis"),
    ("bell", "Bell basis"),
    ("noon_pm", "(|N,0> +- |0,N>)/sqrt 2"),
    (
        "magnetometry_bipartite",
        "pairwise entangled basis, param k in {0,1,2} for X,Y,Z",
    ),
    ("magnetometry_pauli", "(I +- sigma_k^N)/6"),
    (
        "symmetric_antisymmetric",
        "|ii>, (|ij> +- |ji>) basis on two copies of dimension d",
    ),
    ("eqs_reference", "|i>(|0> +- |1>) basis"),
    ("computational", "standard basis of dimension d"),
];

pub fn make_model(spec: &ZooSpec) -> Result<Model, ZooError> {
    let model = match spec.name.as_str() {
        "spin" => {
            spec.check_keys(&[])?;
            spin()
        }
        "off_equator_spin" => {
            spec.check_keys(&["c"])?;
            off_equator_spin(spec.num("c", None)?)
        }
        "noon" => {
            spec.check_keys(&["n"])?;
            noon(spec.count("n", None)?)
        }
        "superdense" => {
            spec.check_keys(&["r"])?;
            let r = spec.num("r", Some(0.5))?;
            if !(0.0..=1.0).contains(&r) {
                return Err(bad("r", "must lie in [0, 1]"));
            }
            superdense(r)
        }
        "magnetometry" => {
            spec.check_keys(&["n", "delta_y", "delta_z"])?;
            let n = spec.count("n", None)?;
            if n > 8 {
                return Err(bad("n", "at most 8 spins"));
            }
            magnetometry(
                n,
                spec.num("delta_y", Some(0.0))?,
                spec.num("delta_z", Some(0.0))?,
            )
        }
        "antiparallel" => {
            spec.check_keys(&[])?;
            antiparallel()
        }
        "antiparallel_depolarized" => {
            spec.check_keys(&["delta"])?;
            let d = spec.num("delta", None)?;
            if !(0.0..=1.0).contains(&d) {
                return Err(bad("delta", "must lie in [0, 1]"));
            }
            antiparallel_depolarized(d)
        }
        "disc" => {
            spec.check_keys(&["n1", "n2", "f1", "f2"])?;
            let n1 = spec.vector("n1", 3, &[0.0, 0.0, 1.0])?;
            let n2 = spec.vector("n2", 3, &[1.0, 0.0, 0.0])?;
            let f1 = spec.vector("f1", 3, &[0.0, 1.0, 0.0])?;
            let f2 = spec.vector("f2", 3, &[0.0, 0.0, 1.0])?;
            disc(
                [n1[0], n1[1], n1[2]],
                [n2[0], n2[1], n2[2]],
                [f1[0], f1[1], f1[2]],
                [f2[0], f2[1], f2[2]],
            )?
        }
        "eqs" => {
            spec.check_keys(&[])?;
            let inner = make_model(
                spec.inner
                    .as_deref()
                    .ok_or_else(|| bad("inner", "missing"))?,
            )?;
            eqs(&inner)?
        }
        "qutrit_las" => {
            spec.check_keys(&["a", "b", "c", "omega"])?;
            let w = spec.vector("omega", 3, &[0.3, 0.5, 1.4])?;
            qutrit_las(
                spec.num("a", Some(0.5))?,
                spec.num("b", Some(0.3))?,
                spec.num("c", Some(0.2))?,
                [w[0], w[1], w[2]],
            )?
        }
        "antiparallel_of" => {
            spec.check_keys(&[])?;
            let inner = make_model(
                spec.inner
                    .as_deref()
                    .ok_or_else(|| bad("inner", "missing"))?,
            )?;
            antiparallel_of(&inner)
        }
        other => return Err(ZooError::UnknownModel(other.into())),
    };
    apply_domain(model, &spec.domain)
}

fn apply_domain(mut model: Model, domain: &BTreeMap<String, [f64; 2]>) -> Result<Model, ZooError> {
    for (name, [lo, hi]) in domain {
        let i = model
            .params
            .iter()
            .position(|p| &p.name == name)
            .ok_or_else(|| bad(name, "no such parameter"))?;
        let outer = model.params[i].domain;
        if !(lo < hi) || *lo < outer.lo - 1e-12 || *hi > outer.hi + 1e-12 {
            return Err(bad(name, "domain override must be a sub-interval"));
        }
        model = model.with_domain(i, *lo, *hi);
    }
    Ok(model)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn cis(t: f64) -> C64 {
    C64::from_polar(1.0, t)
}

/// `|n(eta, phi)> = (cos eta/2, e^{i phi} sin eta/2)`
pub fn bloch_state(eta: f64, phi: f64) -> Vec<C64> {
    vec![c((eta / 2.0).cos(), 0.0), cis(phi) * (eta / 2.0).sin()]
}

fn bloch_state_partials(eta: f64, phi: f64) -> [Vec<C64>; 2] {
    [
        vec![
            c(-(eta / 2.0).sin() / 2.0, 0.0),
            cis(phi) * ((eta / 2.0).cos() / 2.0),
        ],
        vec![ZERO, I * cis(phi) * (eta / 2.0).sin()],
    ]
}

/// `Theta_f v = sigma_Y conj(v)`
pub fn flip(v: &[C64]) -> Vec<C64> {
    vec![-I * v[1].conj(), I * v[0].conj()]
}

fn bloch_vector_state(n: [f64; 3]) -> Vec<C64> {
    let eta = n[2].clamp(-1.0, 1.0).acos();
    bloch_state(eta, n[1].atan2(n[0]))
}

pub fn spin() -> Model {
    let d: VectorsFn = Arc::new(|x: &[f64]| bloch_state_partials(x[0], x[1]).to_vec());
    Model::pure(
        "spin",
        2,
        vec![Parameter::new("eta", 0.0, PI), Parameter::phase("phi")],
        |x| bloch_state(x[0], x[1]),
        Some(d),
    )
}

pub fn off_equator_spin(polar: f64) -> Model {
    let d: VectorsFn =
        Arc::new(move |x: &[f64]| vec![bloch_state_partials(polar, x[0])[1].clone()]);
    Model::pure(
        "off_equator_spin",
        2,
        vec![Parameter::phase("phi")],
        move |x| bloch_state(polar, x[0]),
        Some(d),
    )
}

/// `(|N,0> + e^{-i N phi}|0,N>)/sqrt 2` in the basis `{|N,0>, |0,N>}`.
pub fn noon(n: usize) -> Model {
    let nf = n as f64;
    let d: VectorsFn =
        Arc::new(move |x: &[f64]| vec![vec![ZERO, -I * nf * cis(-nf * x[0]) * FRAC_1_SQRT_2]]);
    Model::pure(
        "noon",
        2,
        vec![Parameter::phase("phi")],
        move |x| vec![c(FRAC_1_SQRT_2, 0.0), cis(-nf * x[0]) * FRAC_1_SQRT_2],
        Some(d),
    )
}

/// `exp(-i x.sigma)` and its three partials.
pub fn su2(x: &[f64]) -> (ComplexMatrix, [ComplexMatrix; 3]) {
    let [sx, sy, sz] = pauli();
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let (sinc, dsinc_over_r) = if r < 1e-4 {
        let r2 = r * r;
        (1.0 - r2 / 6.0 + r2 * r2 / 120.0, -1.0 / 3.0 + r2 / 30.0)
    } else {
        (r.sin() / r, (r * r.cos() - r.sin()) / (r * r * r))
    };
    let xs = &(&sx.scale_re(x[0]) + &sy.scale_re(x[1])) + &sz.scale_re(x[2]);
    let id = ComplexMatrix::identity(2);
    let u = &id.scale_re(r.cos()) - &xs.scale(I * sinc);
    let sig = [&sx, &sy, &sz];
    let du = std::array::from_fn(|k| {
        let a = id.scale_re(-sinc * x[k]);
        let b = &xs.scale_re(dsinc_over_r * x[k]) + &sig[k].scale_re(sinc);
        &a - &b.scale(I)
    });
    (u, du)
}

fn su2_params() -> Vec<Parameter> {
    ["x1", "x2", "x3"]
        .iter()
        .map(|n| Parameter::new(n, -1.5, 1.5))
        .collect()
}

pub fn superdense(r: f64) -> Model {
    let psi0 = vec![c(r.sqrt(), 0.0), ZERO, ZERO, c((1.0 - r).sqrt(), 0.0)];
    let p1 = psi0.clone();
    let id = ComplexMatrix::identity(2);
    let id1 = id.clone();
    let d: VectorsFn = Arc::new(move |x: &[f64]| {
        let (_, du) = su2(x);
        du.iter().map(|g| kron(g, &id1).mul_vec(&p1)).collect()
    });
    Model::pure(
        "superdense",
        4,
        su2_params(),
        move |x| kron(&su2(x).0, &id).mul_vec(&psi0),
        Some(d),
    )
}

/// Applies a single-qubit operator to qubit `q` (most significant first) of `n`.
fn apply_qubit(op: &ComplexMatrix, q: usize, n: usize, v: &[C64]) -> Vec<C64> {
    let stride = 1usize << (n - 1 - q);
    let mut out = v.to_vec();
    for base in 0..v.len() {
        if base & stride != 0 {
            continue;
        }
        let (a, b) = (v[base], v[base | stride]);
        out[base] = op[(0, 0)] * a + op[(0, 1)] * b;
        out[base | stride] = op[(1, 0)] * a + op[(1, 1)] * b;
    }
    out
}

/// Single-spin eigenstates `psi_k^+-` for k = X, Y, Z.
pub fn axis_states(k: usize) -> [Vec<C64>; 2] {
    let h = FRAC_1_SQRT_2;
    match k {
        0 => [vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]],
        1 => [vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]],
        _ => [vec![ONE, ZERO], vec![ZERO, ONE]],
    }
}

fn product_state(v: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ONE];
    for _ in 0..n {
        out = kron_vec(&out, v);
    }
    out
}

/// `(GHZ_X + e^{i dY} GHZ_Y + e^{i dZ} GHZ_Z) / norm`
pub fn magnetometry_probe(n: usize, delta_y: f64, delta_z: f64) -> Vec<C64> {
    let phases = [ONE, cis(delta_y), cis(delta_z)];
    let dim = 1usize << n;
    let mut psi = vec![ZERO; dim];
    for (k, ph) in phases.iter().enumerate() {
        let [p, m] = axis_states(k);
        let (a, b) = (product_state(&p, n), product_state(&m, n));
        for i in 0..dim {
            psi[i] += ph * (a[i] + b[i]) * FRAC_1_SQRT_2;
        }
    }
    normalized(&psi)
}

pub fn magnetometry(n: usize, delta_y: f64, delta_z: f64) -> Model {
    let probe = magnetometry_probe(n, delta_y, delta_z);
    let p1 = probe.clone();
    let d: VectorsFn = Arc::new(move |x: &[f64]| {
        let (u, du) = su2(x);
        (0..3)
            .map(|k| {
                let mut acc = vec![ZERO; p1.len()];
                for target in 0..n {
                    let mut v = p1.clone();
                    for q in 0..n {
                        v = apply_qubit(if q == target { &du[k] } else { &u }, q, n, &v);
                    }
                    acc.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                }
                acc
            })
            .collect()
    });
    Model::pure(
        "magnetometry",
        1 << n,
        su2_params(),
        move |x| {
            let u = su2(x).0;
            (0..n).fold(probe.clone(), |v, q| apply_qubit(&u, q, n, &v))
        },
        Some(d),
    )
}

pub fn antiparallel() -> Model {
    let d: VectorsFn = Arc::new(|x: &[f64]| {
        let v = bloch_state(x[0], x[1]);
        let fv = flip(&v);
        bloch_state_partials(x[0], x[1])
            .iter()
            .map(|dv| {
                let a = kron_vec(dv, &fv);
                let b = kron_vec(&v, &flip(dv));
                a.iter().zip(&b).map(|(p, q)| p + q).collect()
            })
            .collect()
    });
    Model::pure(
        "antiparallel",
        4,
        vec![Parameter::new("eta", 0.0, PI), Parameter::phase("phi")],
        |x| {
            let v = bloch_state(x[0], x[1]);
            kron_vec(&v, &flip(&v))
        },
        Some(d),
    )
}

pub fn antiparallel_depolarized(delta: f64) -> Model {
    let base = antiparallel();
    let b2 = base.clone();
    let noise = ComplexMatrix::identity(4).scale_re(delta / 4.0);
    let drho = Arc::new(move |x: &[f64]| {
        b2.analytic_partials(x)
            .unwrap()
            .iter()
            .map(|d| d.scale_re(1.0 - delta))
            .collect()
    });
    let mut m = Model::mixed(
        "antiparallel_depolarized",
        4,
        base.params.clone(),
        move |x| &base.rho(x).scale_re(1.0 - delta) + &noise,
        Some(drho),
    );
    m.name = "antiparallel_depolarized".into();
    m
}

fn bloch_rho(n: [f64; 3]) -> ComplexMatrix {
    let [sx, sy, sz] = pauli();
    let s = &(&sx.scale_re(n[0]) + &sy.scale_re(n[1])) + &sz.scale_re(n[2]);
    (&ComplexMatrix::identity(2) + &s).scale_re(0.5)
}

/// `(I + n.sigma)/2` with `n = f1(x) n1 + f2(x) n2`, `f(x) = c + a1 x1 + a2 x2`.
pub fn disc(n1: [f64; 3], n2: [f64; 3], f1: [f64; 3], f2: [f64; 3]) -> Result<Model, ZooError> {
    let cross = [
        n1[1] * n2[2] - n1[2] * n2[1],
        n1[2] * n2[0] - n1[0] * n2[2],
        n1[0] * n2[1] - n1[1] * n2[0],
    ];
    if cross.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-9 {
        return Err(bad("n2", "must not be parallel to n1"));
    }
    let bloch = move |x: &[f64]| {
        let a = f1[0] + f1[1] * x[0] + f1[2] * x[1];
        let b = f2[0] + f2[1] * x[0] + f2[2] * x[1];
        [0, 1, 2].map(|k| a * n1[k] + b * n2[k])
    };
    let lim = 0.4;
    for cx in [-lim, lim] {
        for cy in [-lim, lim] {
            let n = bloch(&[cx, cy]);
            if n.iter().map(|v| v * v).sum::<f64>() >= 1.0 {
                return Err(bad("f1", "Bloch vector leaves the ball on the domain"));
            }
        }
    }
    let drho = Arc::new(move |_: &[f64]| {
        let [sx, sy, sz] = pauli();
        (1..3)
            .map(|j| {
                let v = [0, 1, 2].map(|k| f1[j] * n1[k] + f2[j] * n2[k]);
                (&(&sx.scale_re(v[0]) + &sy.scale_re(v[1])) + &sz.scale_re(v[2])).scale_re(0.5)
            })
            .collect()
    });
    Ok(Model::mixed(
        "disc",
        2,
        vec![
            Parameter::new("x1", -lim, lim),
            Parameter::new("x2", -lim, lim),
        ],
        move |x| bloch_rho(bloch(x)),
        Some(drho),
    ))
}

/// Unit normal of the disc spanned by `n1`, `n2`.
fn disc_normal(n1: [f64; 3], n2: [f64; 3]) -> [f64; 3] {
    let cr = [
        n1[1] * n2[2] - n1[2] * n2[1],
        n1[2] * n2[0] - n1[0] * n2[2],
        n1[0] * n2[1] - n1[1] * n2[0],
    ];
    let l = cr.iter().map(|v| v * v).sum::<f64>().sqrt();
    cr.map(|v| v / l)
}

/// `(|psi>|0> + conj(psi)|1>)/sqrt 2`
pub fn eqs(inner: &Model) -> Result<Model, ZooError> {
    let StateRule::Pure { psi, dpsi } = inner.rule.clone() else {
        return Err(bad("inner", "must be a pure family"));
    };
    let embed = |v: &[C64]| -> Vec<C64> {
        v.iter()
            .flat_map(|z| [z * FRAC_1_SQRT_2, z.conj() * FRAC_1_SQRT_2])
            .collect()
    };
    let d: Option<VectorsFn> = dpsi.map(|dp| {
        let f: VectorsFn = Arc::new(move |x: &[f64]| dp(x).iter().map(|v| embed(v)).collect());
        f
    });
    Ok(Model::pure(
        &format!("eqs({})", inner.name),
        2 * inner.dim,
        inner.params.clone(),
        move |x| embed(&psi(x)),
        d,
    ))
}

/// `diag(a, b, c) + x H(omega)` with unit off-diagonal moduli and phases `omega_12, omega_13, omega_23`.
pub fn qutrit_las(a: f64, b: f64, c3: f64, omega: [f64; 3]) -> Result<Model, ZooError> {
    let s = a + b + c3;
    if (s - 1.0).abs() > 1e-12 || a <= 0.0 || b <= 0.0 || c3 <= 0.0 {
        return Err(bad("a", "a, b, c must be positive and sum to one"));
    }
    let h = ComplexMatrix::from_fn(3, |i, j| match (i, j) {
        (0, 1) => cis(omega[0]),
        (0, 2) => cis(omega[1]),
        (1, 2) => cis(omega[2]),
        (1, 0) => cis(-omega[0]),
        (2, 0) => cis(-omega[1]),
        (2, 1) => cis(-omega[2]),
        _ => ZERO,
    });
    let lim = 0.4 * a.min(b).min(c3);
    let base = ComplexMatrix::diag_real(&[a, b, c3]);
    let h1 = h.clone();
    Ok(Model::mixed(
        "qutrit_las",
        3,
        vec![Parameter::new("x", -lim, lim)],
        move |x| &base + &h.scale_re(x[0]),
        Some(Arc::new(move |_: &[f64]| vec![h1.clone()])),
    ))
}

/// `rho (x) conj(rho)`
pub fn antiparallel_of(inner: &Model) -> Model {
    let name = format!("antiparallel_of({})", inner.name);
    let d = inner.dim;
    if let StateRule::Pure { psi, dpsi } = inner.rule.clone() {
        let psi2 = psi.clone();
        let dd: Option<VectorsFn> = dpsi.map(|dp| {
            let f: VectorsFn = Arc::new(move |x: &[f64]| {
                let v = psi2(x);
                let vc: Vec<C64> = v.iter().map(|z| z.conj()).collect();
                dp(x)
                    .iter()
                    .map(|dv| {
                        let dvc: Vec<C64> = dv.iter().map(|z| z.conj()).collect();
                        let a = kron_vec(dv, &vc);
                        let b = kron_vec(&v, &dvc);
                        a.iter().zip(&b).map(|(p, q)| p + q).collect()
                    })
                    .collect()
            });
            f
        });
        return Model::pure(
            &name,
            d * d,
            inner.params.clone(),
            move |x| {
                let v = psi(x);
                let vc: Vec<C64> = v.iter().map(|z| z.conj()).collect();
                kron_vec(&v, &vc)
            },
            dd,
        );
    }
    let (m1, m2) = (inner.clone(), inner.clone());
    let drho = if inner.has_analytic_partials() {
        let f: crate::model::MatricesFn = Arc::new(move |x: &[f64]| {
            let r = m2.rho(x);
            let rc = r.conj();
            m2.analytic_partials(x)
                .unwrap()
                .iter()
                .map(|dr| &kron(dr, &rc) + &kron(&r, &dr.conj()))
                .collect()
        });
        Some(f)
    } else {
        None
    };
    Model::mixed(
        &name,
        d * d,
        inner.params.clone(),
        move |x| {
            let r = m1.rho(x);
            kron(&r, &r.conj())
        },
        drho,
    )
}

/// Known global antiunitary symmetry of a named family.
pub fn canonical_gas(spec: &ZooSpec) -> Result<Antiunitary, ZooError> {
    let none = || ZooError::NoKnownGas(spec.name.clone());
    let [sx, sy, sz] = pauli();
    match spec.name.as_str() {
        "noon" => Ok(Antiunitary::new(sx)),
        "superdense" => {
            if (spec.num("r", Some(0.5))? - 0.5).abs() > 1e-12 {
                return Err(none());
            }
            Ok(Antiunitary::new(kron(&sy, &sy)))
        }
        "antiparallel" | "antiparallel_depolarized" => {
            Ok(Antiunitary::new(&swap(2) * &kron(&sy, &sy)))
        }
        "magnetometry" => {
            let n = spec.count("n", None)?;
            if n % 2 == 1 {
                return Err(bad("n", "odd spin number has no spin-flip conjugation"));
            }
            let dy = spec.num("delta_y", Some(0.0))?;
            let dz = spec.num("delta_z", Some(0.0))?;
            let on_lattice = |d: f64| {
                let t = d.rem_euclid(PI);
                t < 1e-12 || PI - t < 1e-12
            };
            if !(on_lattice(dy) && on_lattice(dz)) {
                return Err(none());
            }
            Ok(tensor_power(&Antiunitary::spin_flip(), n))
        }
        "eqs" => {
            let inner = make_model(
                spec.inner
                    .as_deref()
                    .ok_or_else(|| bad("inner", "missing"))?,
            )?;
            Ok(Antiunitary::new(kron(
                &ComplexMatrix::identity(inner.dim),
                &sx,
            )))
        }
        "antiparallel_of" => {
            let inner = make_model(
                spec.inner
                    .as_deref()
                    .ok_or_else(|| bad("inner", "missing"))?,
            )?;
            Ok(Antiunitary::new(swap(inner.dim)))
        }
        "off_equator_spin" => {
            let polar = spec.num("c", None)?;
            if (polar - PI / 2.0).abs() > 1e-12 {
                return Err(none());
            }
            // spin flip, then a pi rotation about z
            Ok(Antiunitary::spin_flip().after_unitary(&sz))
        }
        "disc" => {
            let n1 = spec.vector("n1", 3, &[0.0, 0.0, 1.0])?;
            let n2 = spec.vector("n2", 3, &[1.0, 0.0, 0.0])?;
            let m = disc_normal([n1[0], n1[1], n1[2]], [n2[0], n2[1], n2[2]]);
            let ms = &(&sx.scale_re(m[0]) + &sy.scale_re(m[1])) + &sz.scale_re(m[2]);
            // spin flip, then a pi rotation about the normal
            Ok(Antiunitary::spin_flip().after_unitary(&ms))
        }
        "qutrit_las" => {
            let w = spec.vector("omega", 3, &[0.3, 0.5, 1.4])?;
            // consistent phases: conjugation after the diagonal rephasing
            if ((w[1] - w[0] - w[2] + PI).rem_euclid(2.0 * PI) - PI).abs() > 1e-12 {
                return Err(none());
            }
            let ph = [ONE, cis(-w[0]), cis(-w[1])];
            let u = ComplexMatrix::diag(&ph);
            Ok(Antiunitary::new(&u * &u.transpose()))
        }
        _ => Err(none()),
    }
}

fn basis_state(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[i] = ONE;
    v
}

fn combine(a: &[C64], ca: C64, b: &[C64], cb: C64) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x * ca + y * cb).collect()
}

/// Tetrahedral entangled basis for antiparallel spins.
pub fn gisin_basis() -> Vec<Vec<C64>> {
    let s3 = 3f64.sqrt();
    let a = (s3 + 1.0) / (2.0 * 2f64.sqrt());
    let b = (s3 - 1.0) / (2.0 * 2f64.sqrt());
    tetrahedron()
        .iter()
        .map(|&n| {
            let v = bloch_vector_state(n);
            let fv = flip(&v);
            combine(&kron_vec(&v, &fv), c(a, 0.0), &kron_vec(&fv, &v), c(b, 0.0))
        })
        .collect()
}

/// Three vectors at `n_z = -1/3`, azimuths `0, 2pi/3, 4pi/3`, and the north pole.
pub fn tetrahedron() -> [[f64; 3]; 4] {
    let s = 2.0 * 2f64.sqrt() / 3.0;
    let az = |k: f64| 2.0 * PI * k / 3.0;
    [
        [s, 0.0, -1.0 / 3.0],
        [s * az(1.0).cos(), s * az(1.0).sin(), -1.0 / 3.0],
        [s * az(2.0).cos(), s * az(2.0).sin(), -1.0 / 3.0],
        [0.0, 0.0, 1.0],
    ]
}

pub fn antiparallel_product_basis() -> Vec<Vec<C64>> {
    let h = FRAC_1_SQRT_2;
    let e = |i| basis_state(4, i);
    vec![
        combine(&e(1), I, &e(1), ZERO),
        combine(&e(2), I, &e(2), ZERO),
        combine(&e(0), c(h, 0.0), &e(3), c(h, 0.0)),
        combine(&e(0), c(0.0, -h), &e(3), c(0.0, h)),
    ]
}

pub fn bell_basis() -> Vec<Vec<C64>> {
    let h = FRAC_1_SQRT_2;
    let psi = vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)];
    let id = ComplexMatrix::identity(2);
    let mut out = vec![psi.clone()];
    for s in pauli() {
        out.push(kron(&s.scale(I), &id).mul_vec(&psi));
    }
    out
}

pub fn noon_pm_basis() -> Vec<Vec<C64>> {
    let h = FRAC_1_SQRT_2;
    vec![vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]]
}

/// Pairwise entangled basis on qubit pairs (1,2), (3,4), ... built from axis `k`.
pub fn magnetometry_bipartite_basis(n: usize, k: usize) -> Result<Vec<Vec<C64>>, ZooError> {
    if n % 2 == 1 || n == 0 {
        return Err(bad("n", "needs an even number of spins"));
    }
    let [p, m] = axis_states(k);
    let h = FRAC_1_SQRT_2;
    let mm = kron_vec(&m, &m);
    let pp = kron_vec(&p, &p);
    let mp = kron_vec(&m, &p);
    let pm = kron_vec(&p, &m);
    // 1/(-sqrt2 i) = i/sqrt2
    let pair = [
        combine(&mm, c(0.0, h), &pp, c(0.0, h)),
        combine(&mm, c(0.0, h), &pp, c(0.0, -h)),
        combine(&mp, c(h, 0.0), &pm, c(h, 0.0)),
        combine(&mp, c(h, 0.0), &pm, c(-h, 0.0)),
    ];
    let mut out = vec![vec![ONE]];
    for _ in 0..n / 2 {
        out = out
            .iter()
            .flat_map(|a| pair.iter().map(move |b| kron_vec(a, b)))
            .collect();
    }
    Ok(out)
}

pub fn magnetometry_pauli_povm(n: usize) -> Result<Povm, ZooError> {
    if n % 2 == 1 || n == 0 {
        return Err(bad("n", "needs an even number of spins"));
    }
    let id = ComplexMatrix::identity(1 << n);
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    for (k, s) in pauli().iter().enumerate() {
        let mut big = ComplexMatrix::identity(1);
        for _ in 0..n {
            big = kron(&big, s);
        }
        for (sign, tag) in [(1.0, "+"), (-1.0, "-")] {
            elements.push((&id + &big.scale_re(sign)).scale_re(1.0 / 6.0));
            labels.push(format!("{}{}", ["X", "Y", "Z"][k], tag));
        }
    }
    Ok(Povm::new(elements, labels)?)
}

/// `{|ii>, (|ij>+|ji>)/sqrt2, (|ij>-|ji>)/(sqrt2 i)}` on `C^d (x) C^d`.
pub fn symmetric_antisymmetric_basis(d: usize) -> Vec<Vec<C64>> {
    let h = FRAC_1_SQRT_2;
    let e = |i: usize, j: usize| basis_state(d * d, i * d + j);
    let mut out = Vec::new();
    for i in 0..d {
        out.push(e(i, i));
        for j in (i + 1)..d {
            out.push(combine(&e(i, j), c(h, 0.0), &e(j, i), c(h, 0.0)));
            out.push(combine(&e(i, j), c(0.0, -h), &e(j, i), c(0.0, h)));
        }
    }
    out
}

/// `{|i>(|0>+|1>)/sqrt2, |i>(|0>-|1>)/(sqrt2 i)}`
pub fn eqs_reference_basis(d: usize) -> Vec<Vec<C64>> {
    let h = FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for i in 0..d {
        let mut a = vec![ZERO; 2 * d];
        a[2 * i] = c(h, 0.0);
        a[2 * i + 1] = c(h, 0.0);
        out.push(a);
        let mut b = vec![ZERO; 2 * d];
        b[2 * i] = c(0.0, -h);
        b[2 * i + 1] = c(0.0, h);
        out.push(b);
    }
    out
}

/// Named measurement. `params` supplies `n`, `k` or `d` where needed.
pub fn canonical_povm(name: &str, params: &ZooSpec) -> Result<Povm, ZooError> {
    let basis = match name {
        "gisin" => gisin_basis(),
        "antiparallel_product" => antiparallel_product_basis(),
        "bell" => bell_basis(),
        "noon_pm" => noon_pm_basis(),
        "magnetometry_bipartite" => magnetometry_bipartite_basis(
            params.count("n", Some(2))?,
            params.num("k", Some(2.0))? as usize,
        )?,
        "magnetometry_pauli" => return magnetometry_pauli_povm(params.count("n", Some(2))?),
        "symmetric_antisymmetric" => symmetric_antisymmetric_basis(params.count("d", Some(2))?),
        "eqs_reference" => eqs_reference_basis(params.count("d", Some(2))?),
        "computational" => {
            let d = params.count("d", Some(2))?;
            (0..d).map(|i| basis_state(d, i)).collect()
        }
        other => return Err(ZooError::UnknownMeasurement(other.into())),
    };
    Ok(Povm::from_basis(&basis, name)?)
}

/// Closed-form quantities used as independent references.
pub mod closed_form {
    use crate::linalg::RealMatrix;

    pub fn spin_qfim(eta: f64) -> RealMatrix {
        vec![vec![1.0, 0.0], vec![0.0, eta.sin().powi(2)]]
    }

    pub fn spin_uhlmann(eta: f64) -> f64 {
        eta.sin() / 2.0
    }

    /// QFIM of globally depolarized antiparallel spins. For `p P + (1-p) I/d` with `P`
    /// pure the QFIM is `p^2 / (p + 2(1-p)/d)` times that of `P`; here `d = 4`:
    /// `2 (1-delta)^2 / (1 - delta/2) diag(1, sin^2 eta)`.
    pub fn antiparallel_depolarized_qfim(eta: f64, delta: f64) -> RealMatrix {
        let s = 2.0 * (1.0 - delta).powi(2) / (1.0 - delta / 2.0);
        vec![vec![s, 0.0], vec![0.0, s * eta.sin().powi(2)]]
    }

    /// The simpler `2 (1-delta)^2 diag(1, sin^2 eta)`. Exact only at `delta = 0`;
    /// it underestimates the QFIM of the depolarized pair.
    pub fn antiparallel_depolarized_qfim_approx(eta: f64, delta: f64) -> RealMatrix {
        let s = 2.0 * (1.0 - delta).powi(2);
        vec![vec![s, 0.0], vec![0.0, s * eta.sin().powi(2)]]
    }

    /// `1 / (2 (1-delta)^2 sin^2 eta)`, the inverse phase entry of the approximate QFIM.
    /// Not a lower bound for `delta > 0`; see [`antiparallel_phase_qcrb`].
    pub fn fig3_bound(eta: f64, delta: f64) -> f64 {
        1.0 / (2.0 * (1.0 - delta).powi(2) * eta.sin().powi(2))
    }

    /// Phase entry of the inverse exact QFIM.
    pub fn antiparallel_phase_qcrb(eta: f64, delta: f64) -> f64 {
        fig3_bound(eta, delta) * (1.0 - delta / 2.0)
    }

    /// Classical Fisher matrix of the tetrahedral basis on depolarized antiparallel spins.
    /// Probabilities are `(1-delta) A_k^2 / 3 + delta / 4` with
    /// `A_k = sqrt6/4 (1 + sqrt3 n.n_k)`.
    pub fn gisin_cfim(eta: f64, phi: f64, delta: f64) -> RealMatrix {
        let s6 = 6f64.sqrt() / 4.0;
        let s2 = 2f64.sqrt() / 4.0;
        let mut terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|k| {
                let ph = phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let a = eta.sin() * ph.cos() - s2 * eta.cos() + s6;
                let be = eta.cos() * ph.cos() + s2 * eta.sin();
                let bp = -eta.sin() * ph.sin();
                (a, be, bp)
            })
            .collect();
        let r3 = 3f64.sqrt();
        terms.push((s6 * (1.0 + r3 * eta.cos()), -s6 * r3 * eta.sin(), 0.0));
        let q = 3.0 * delta / (4.0 * (1.0 - delta));
        let mut f = vec![vec![0.0; 2]; 2];
        for (a, be, bp) in terms {
            let w = 4.0 * (1.0 - delta) / 3.0 * a * a / (a * a + q);
            let b = [be, bp];
            for i in 0..2 {
                for j in 0..2 {
                    f[i][j] += w * b[i] * b[j];
                }
            }
        }
        f
    }

    /// Classical Fisher matrix of the product-type basis on depolarized antiparallel spins.
    pub fn antiparallel_product_cfim(eta: f64, phi: f64, delta: f64) -> RealMatrix {
        let (s, c) = (eta.sin(), eta.cos());
        let (s2p, c2p) = ((2.0 * phi).sin(), (2.0 * phi).cos());
        let q = delta / (1.0 - delta);
        let w = 1.0 - delta;
        let fee = w
            * (s * s * (1.0 + c).powi(2) / ((1.0 + c).powi(2) + q)
                + s * s * (1.0 - c).powi(2) / ((1.0 - c).powi(2) + q)
                + s * s * c * c * (1.0 - c2p).powi(2) / (s * s * (1.0 - c2p) + q)
                + s * s * c * c * (1.0 + c2p).powi(2) / (s * s * (1.0 + c2p) + q));
        let fep = w
            * (s.powi(3) * c * s2p * (1.0 - c2p) / (s * s * (1.0 - c2p) + q)
                - s.powi(3) * c * s2p * (1.0 + c2p) / (s * s * (1.0 + c2p) + q));
        let fpp = w
            * (s.powi(4) * s2p * s2p / (s * s * (1.0 + c2p) + q)
                + s.powi(4) * s2p * s2p / (s * s * (1.0 - c2p) + q));
        vec![vec![fee, fep], vec![fep, fpp]]
    }
}
