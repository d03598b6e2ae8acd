//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;

use imfree::estimate::{run_trials, CovarianceReport, TrialConfig};
use imfree::fig3::{default_deltas, fig3_rows};
use imfree::fisher::{cfim, fisher_report, qcrb_efficiency, FisherReport};
use imfree::linalg::{hermitian_eig, ComplexMatrix};
use imfree::model::{evaluate, StatePoint};
use imfree::symmetry::{
    asymmetry_measures, find_las, grid_points, verify_gas, Antiunitary, AsymmetryConfig,
    LasOutcome, SymmetryError,
};
use imfree::zoo::{
    canonical_gas, make_model, ZooSpec, DOCUMENTED_GAS, MEASUREMENTS, MODELS, MODEL_ARGS,
};
use rand::Rng;
use serde::Serialize;

use crate::config::{Loaded, ModelSource};
use crate::output::{
    matrix_cells, matrix_headers, matrix_lines, num, vec_str, OutDir, Table, SCHEMA_VERSION,
};
use crate::CliError;

/// Grid used to verify a canonical symmetry over the whole domain.
const GAS_GRID: usize = 7;

const PARTIAL_HERMITIAN_TOL: f64 = 1e-9;

pub struct Run {
    pub report: String,
    pub files: Vec<PathBuf>,
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn point_at(source: &ModelSource, x: &[f64]) -> Result<StatePoint, CliError> {
    match source {
        ModelSource::Zoo { model, .. } => evaluate(model, x).map_err(numerical),
        ModelSource::Point(p) => {
            if let Some(i) = p
                .partials
                .iter()
                .position(|d| d.hermitian_defect() > PARTIAL_HERMITIAN_TOL)
            {
                return Err(CliError::Numerical(format!("partial {i} is not Hermitian")));
            }
            Ok(p.clone())
        }
    }
}

fn x_headers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x_{i}")).collect()
}

fn complex_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Phases of the witness in the eigenbasis of a non-degenerate state, where it is diagonal.
fn witness_phases(point: &StatePoint, witness: &Antiunitary) -> Option<Vec<f64>> {
    let es = hermitian_eig(&point.rho).ok()?;
    if es.values.windows(2).any(|w| w[1] - w[0] <= 1e-9) {
        return None;
    }
    let v = &es.vectors;
    let d = &(&v.adjoint() * &witness.m) * &v.conj();
    let n = d.dim();
    let off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)].norm());
    if off.fold(0.0, f64::max) > 1e-8 {
        return None;
    }
    Some((0..n).map(|k| d[(k, k)].arg()).collect())
}

#[derive(Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
enum LasSummary {
    Found {
        residual: f64,
        witness: Vec<Vec<[f64; 2]>>,
        phases: Option<Vec<f64>>,
    },
    Cycle {
        vertices: Vec<usize>,
        mismatch: f64,
    },
    ImaginaryOverlap {
        i: usize,
        j: usize,
        value: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl LasSummary {
    fn new(outcome: LasOutcome, point: &StatePoint) -> Self {
        match outcome {
            LasOutcome::Found { witness, residual } => LasSummary::Found {
                residual,
                witness: complex_rows(&witness.m),
                phases: witness_phases(point, &witness),
            },
            LasOutcome::CycleObstruction(c) => LasSummary::Cycle {
                vertices: c.vertices,
                mismatch: c.mismatch,
            },
            LasOutcome::ImaginaryOverlap { i, j, value } => {
                LasSummary::ImaginaryOverlap { i, j, value }
            }
            LasOutcome::Inconclusive { reason } => LasSummary::Inconclusive { reason },
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            LasSummary::Found { .. } => "found",
            LasSummary::Cycle { .. } => "cycle",
            LasSummary::ImaginaryOverlap { .. } => "imaginary_overlap",
            LasSummary::Inconclusive { .. } => "inconclusive",
        }
    }

    fn describe(&self) -> String {
        match self {
            LasSummary::Found {
                residual, phases, ..
            } => {
                let mut s = format!("found, residual {}", num(*residual));
                if let Some(p) = phases {
                    let _ = write!(s, ", witness phases {}", vec_str(p));
                }
                s
            }
            LasSummary::Cycle { vertices, mismatch } => {
                format!(
                    "not found; phase cycle {vertices:?} misses closure by {}",
                    num(*mismatch)
                )
            }
            LasSummary::ImaginaryOverlap { i, j, value } => {
                format!(
                    "not found; Im <d{i} rho psi|d{j} rho psi> = {}",
                    num(*value)
                )
            }
            LasSummary::Inconclusive { reason } => format!("inconclusive ({reason})"),
        }
    }
}

#[derive(Serialize)]
struct GasSummary {
    witness: Vec<Vec<[f64; 2]>>,
    grid_per_axis: usize,
    found: bool,
    residual: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct AnalyzePoint {
    x: Vec<f64>,
    #[serde(flatten)]
    fisher: FisherReport,
    las: LasSummary,
}

#[derive(Serialize)]
struct AnalyzeSummary {
    schema_version: u32,
    model: String,
    gas: Option<GasSummary>,
    points: Vec<AnalyzePoint>,
}

pub fn analyze(cfg: &Loaded, out: Option<OutDir>) -> Result<Run, CliError> {
    cfg.check_command("analyze")?;
    let source = cfg.model("analyze")?;
    let points = cfg.points(&source, "analyze")?;
    let mut report = format!("model: {}\n", source.label());

    let gas = match &source {
        ModelSource::Zoo { spec, model } => match canonical_gas(spec) {
            Ok(theta) => {
                let v =
                    verify_gas(model, &theta, &grid_points(model, GAS_GRID)).map_err(numerical)?;
                let _ = writeln!(
                    report,
                    "canonical GAS on a {GAS_GRID}-per-axis grid: {} (residual {})",
                    if v.found { "verified" } else { "NOT verified" },
                    num(v.residual)
                );
                Some(GasSummary {
                    witness: complex_rows(&theta.m),
                    grid_per_axis: GAS_GRID,
                    found: v.found,
                    residual: v.residual,
                    tolerance: v.tolerance,
                })
            }
            Err(e) => {
                let _ = writeln!(report, "canonical GAS: {e}");
                None
            }
        },
        ModelSource::Point(_) => None,
    };

    let mut rows = Vec::with_capacity(points.len());
    for (k, x) in points.iter().enumerate() {
        let p = point_at(&source, x)?;
        let fisher = fisher_report(&p).map_err(numerical)?;
        let las = LasSummary::new(find_las(&p).map_err(numerical)?, &p);
        let _ = writeln!(report, "\npoint {k}: x = {}", vec_str(x));
        let _ = write!(report, "  QFIM:\n{}", matrix_lines(&fisher.qfim, "    "));
        let _ = write!(
            report,
            "  Uhlmann curvature:\n{}",
            matrix_lines(&fisher.uhlmann, "    ")
        );
        let _ = writeln!(
            report,
            "  weakly commutative: {}, quasi-classical: {}, partially commutative: {}",
            fisher.weakly_commutative, fisher.quasi_classical, fisher.partially_commutative
        );
        let _ = writeln!(report, "  LAS: {}", las.describe());
        rows.push(AnalyzePoint {
            x: x.clone(),
            fisher,
            las,
        });
    }

    let mut files = Vec::new();
    if let Some(dir) = out {
        let n = rows.first().map_or(0, |r| r.fisher.qfim.len());
        let mut cols = vec!["point".to_string()];
        cols.extend(x_headers(points[0].len()));
        cols.extend(matrix_headers("qfim", n));
        cols.extend(matrix_headers("uhlmann", n));
        cols.extend(
            [
                "weakly_commutative",
                "quasi_classical",
                "partially_commutative",
                "rank",
                "sld_residual",
                "las",
            ]
            .map(String::from),
        );
        let mut t = Table::new(cols);
        for (k, r) in rows.iter().enumerate() {
            let mut cells = vec![k.to_string()];
            cells.extend(r.x.iter().map(|&v| num(v)));
            cells.extend(matrix_cells(&r.fisher.qfim));
            cells.extend(matrix_cells(&r.fisher.uhlmann));
            cells.push(r.fisher.weakly_commutative.to_string());
            cells.push(r.fisher.quasi_classical.to_string());
            cells.push(r.fisher.partially_commutative.to_string());
            cells.push(r.fisher.rank.to_string());
            cells.push(num(r.fisher.sld_residual));
            cells.push(r.las.tag().to_string());
            t.push(cells);
        }
        files.push(dir.write_table("analyze.csv", &t)?);
        let summary = AnalyzeSummary {
            schema_version: SCHEMA_VERSION,
            model: source.label(),
            gas,
            points: rows,
        };
        files.push(dir.write_json("analyze.json", &summary)?);
    }
    Ok(Run { report, files })
}

pub fn povm_eval(cfg: &Loaded, out: Option<OutDir>) -> Result<Run, CliError> {
    cfg.check_command("povm-eval")?;
    let source = cfg.model("povm-eval")?;
    let points = cfg.points(&source, "povm-eval")?;
    let (povm, povm_label) = cfg.povm(&source, "povm-eval")?;
    let dim = match &source {
        ModelSource::Zoo { model, .. } => model.dim,
        ModelSource::Point(p) => p.dim(),
    };
    if povm.dim() != dim {
        return Err(CliError::Config(format!(
            "measurement has dimension {}, model has {dim}",
            povm.dim()
        )));
    }
    let mut report = format!(
        "model: {}\nmeasurement: {povm_label} ({} outcomes)\n",
        source.label(),
        povm.len()
    );
    let mut table: Option<Table> = None;
    for (k, x) in points.iter().enumerate() {
        let p = point_at(&source, x)?;
        let fisher = fisher_report(&p).map_err(numerical)?;
        let fc = cfim(&p, &povm).map_err(numerical)?;
        let eff = qcrb_efficiency(&fc.matrix, &fisher.qfim).map_err(numerical)?;
        let yang = if fisher.rank == 1 {
            Some(imfree::povm::yang_optimality_check(&p, &povm).map_err(numerical)?)
        } else {
            None
        };
        let _ = writeln!(report, "\npoint {k}: x = {}", vec_str(x));
        let _ = write!(report, "  CFIM:\n{}", matrix_lines(&fc.matrix, "    "));
        let _ = writeln!(report, "  efficiency: {}", num(eff.efficiency));
        if fc.divergent {
            let _ = writeln!(
                report,
                "  warning: a null outcome has non-zero slope; CFIM is unbounded here"
            );
        }
        if let Some(y) = &yang {
            let verdicts: Vec<&str> = y
                .per_element
                .iter()
                .map(|&b| if b { "ok" } else { "fails" })
                .collect();
            let _ = writeln!(
                report,
                "  optimality condition: {} [{}]",
                y.optimal,
                verdicts.join(", ")
            );
        }

        let n = fc.matrix.len();
        let t = table.get_or_insert_with(|| {
            let mut cols = vec!["point".to_string()];
            cols.extend(x_headers(x.len()));
            cols.push("efficiency".into());
            cols.extend(matrix_headers("cfim", n));
            cols.extend(matrix_headers("qfim", n));
            cols.push("divergent".into());
            cols.push("yang_optimal".into());
            Table::new(cols)
        });
        let mut cells = vec![k.to_string()];
        cells.extend(x.iter().map(|&v| num(v)));
        cells.push(num(eff.efficiency));
        cells.extend(matrix_cells(&fc.matrix));
        cells.extend(matrix_cells(&fisher.qfim));
        cells.push(fc.divergent.to_string());
        cells.push(yang.map_or(String::new(), |y| y.optimal.to_string()));
        t.push(cells);
    }
    let mut files = Vec::new();
    if let (Some(dir), Some(t)) = (out, table) {
        files.push(dir.write_table("povm_eval.csv", &t)?);
    }
    Ok(Run { report, files })
}

pub fn fig3(cfg: &Loaded, out: Option<OutDir>) -> Result<Run, CliError> {
    cfg.check_command("fig3")?;
    let deltas = cfg
        .cfg
        .fig3
        .as_ref()
        .and_then(|f| f.deltas.clone())
        .unwrap_or_else(default_deltas);
    if let Some(d) = deltas.iter().find(|d| !(0.0..1.0).contains(*d)) {
        return Err(CliError::Config(format!("delta {d} outside [0, 1)")));
    }
    let rows = fig3_rows(&deltas).map_err(numerical)?;
    let mut t = Table::new(["delta", "basis", "eta", "phi", "dev_phi2", "bound", "qcrb"]);
    for r in &rows {
        t.push(vec![
            num(r.delta),
            r.basis.to_string(),
            num(r.eta),
            num(r.phi),
            num(r.dev_phi2),
            num(r.bound),
            num(r.qcrb),
        ]);
    }
    match out {
        Some(dir) => {
            let path = dir.write_table("fig3.csv", &t)?;
            Ok(Run {
                report: format!("{} rows\n", rows.len()),
                files: vec![path],
            })
        }
        None => Ok(Run {
            report: String::from_utf8_lossy(&t.to_bytes()?).into_owned(),
            files: vec![],
        }),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    schema_version: u32,
    model: String,
    measurement: String,
    seed: u64,
    seed_generated: bool,
    true_x: Vec<f64>,
    n_c: u64,
    trials: usize,
    grid_per_axis: usize,
    report: CovarianceReport,
}

pub fn simulate(
    cfg: &Loaded,
    out: Option<OutDir>,
    seed_flag: Option<u64>,
) -> Result<Run, CliError> {
    cfg.check_command("simulate")?;
    let source = cfg.model("simulate")?;
    let ModelSource::Zoo { model, spec } = &source else {
        return Err(CliError::Config(
            "simulate needs a zoo model, not a matrix file".into(),
        ));
    };
    let sim = cfg
        .cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("`simulate` needs a [simulate] section".into()))?;
    let (povm, povm_label) = cfg.povm(&source, "simulate")?;
    model
        .check_domain(&sim.true_x)
        .map_err(|e| CliError::Config(format!("true_x: {e}")))?;
    let (seed, generated) = match seed_flag.or(sim.seed) {
        Some(s) => (s, false),
        None => (rand::rng().random(), true),
    };
    let tc = TrialConfig {
        true_x: sim.true_x.clone(),
        n_c: sim.n_c,
        trials: sim.trials,
        seed,
        grid_per_axis: sim.grid_per_axis.unwrap_or(64),
    };
    let output = run_trials(model, &povm, &tc).map_err(|e| match e {
        imfree::estimate::EstimateError::TooFewSamples
        | imfree::estimate::EstimateError::Dimension { .. } => CliError::Config(e.to_string()),
        other => numerical(other),
    })?;
    let r = &output.report;
    let mut report = format!(
        "model: {spec}\nmeasurement: {povm_label}\nseed: {seed}{}\ntrials: {} used, {} excluded ({})\n",
        if generated { " (generated)" } else { "" },
        r.used,
        r.excluded,
        if r.valid { "valid" } else { "INVALID: more than 1% excluded" }
    );
    let _ = writeln!(report, "bias: {}", vec_str(&r.bias));
    let _ = write!(
        report,
        "N_C x covariance:\n{}",
        matrix_lines(&r.scaled_covariance, "  ")
    );
    if let Some(ci) = &r.cfim_inverse {
        let _ = write!(report, "CFIM inverse:\n{}", matrix_lines(ci, "  "));
    }
    if let Some(qi) = &r.qfim_inverse {
        let _ = write!(report, "QFIM inverse:\n{}", matrix_lines(qi, "  "));
    }

    let mut files = Vec::new();
    if let Some(dir) = out {
        let mut cols = vec!["trial".to_string()];
        cols.extend((0..model.n_params()).map(|i| format!("estimate_{i}")));
        cols.extend(["log_likelihood", "degenerate", "on_boundary"].map(String::from));
        let mut t = Table::new(cols);
        for row in &output.rows {
            let mut cells = vec![row.trial.to_string()];
            cells.extend(row.estimate.iter().map(|&v| num(v)));
            cells.push(num(row.log_likelihood));
            cells.push(row.degenerate.to_string());
            cells.push(row.on_boundary.to_string());
            t.push(cells);
        }
        files.push(dir.write_table("trials.csv", &t)?);
        let summary = SimulateSummary {
            schema_version: SCHEMA_VERSION,
            model: spec.to_string(),
            measurement: povm_label,
            seed,
            seed_generated: generated,
            true_x: tc.true_x.clone(),
            n_c: tc.n_c,
            trials: tc.trials,
            grid_per_axis: tc.grid_per_axis,
            report: output.report.clone(),
        };
        files.push(dir.write_json("summary.json", &summary)?);
    }
    Ok(Run { report, files })
}

pub fn asymmetry(cfg: &Loaded, out: Option<OutDir>) -> Result<Run, CliError> {
    cfg.check_command("asymmetry")?;
    let source = cfg.model("asymmetry")?;
    let points = cfg.points(&source, "asymmetry")?;
    let opts = cfg
        .cfg
        .asymmetry
        .as_ref()
        .map_or(AsymmetryConfig::default(), |a| AsymmetryConfig {
            starts: a.starts,
            seed: a.seed,
        });
    let mut report = format!("model: {}\n", source.label());
    let mut cols = vec!["point".to_string()];
    cols.extend(x_headers(points[0].len()));
    cols.extend(["status", "m_sq", "m1_max", "m1_mean", "las_found"].map(String::from));
    let mut t = Table::new(cols);
    for (k, x) in points.iter().enumerate() {
        let p = point_at(&source, x)?;
        let las = find_las(&p).map_err(numerical)?.is_found();
        let mut cells = vec![k.to_string()];
        cells.extend(x.iter().map(|&v| num(v)));
        match asymmetry_measures(&p, opts) {
            Ok(a) => {
                let _ = writeln!(
                    report,
                    "point {k}: x = {}  m_sq {}  m1_max {}  m1_mean {}  LAS {}",
                    vec_str(x),
                    num(a.m_sq),
                    num(a.m1_max),
                    num(a.m1_mean),
                    las
                );
                cells.extend(["ok".to_string(), num(a.m_sq), num(a.m1_max), num(a.m1_mean)]);
            }
            Err(SymmetryError::Degenerate { gap }) => {
                let _ = writeln!(
                    report,
                    "point {k}: x = {}  degenerate spectrum (gap {})",
                    vec_str(x),
                    num(gap)
                );
                cells.extend([
                    "degenerate".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
            Err(e) => return Err(numerical(e)),
        }
        cells.push(las.to_string());
        t.push(cells);
    }
    let mut files = Vec::new();
    if let Some(dir) = out {
        files.push(dir.write_table("asymmetry.csv", &t)?);
    }
    Ok(Run { report, files })
}

fn lookup<'a>(table: &'a [(&str, &str)], name: &str) -> &'a str {
    table
        .iter()
        .find(|(n, _)| *n == name)
        .map_or("", |(_, d)| d)
}

fn describe_params(name: &str) -> String {
    let mut spec = ZooSpec::new(name);
    match name {
        "off_equator_spin" => spec = spec.with("c", std::f64::consts::FRAC_PI_3),
        "noon" | "magnetometry" => spec = spec.with("n", 2.0),
        "antiparallel_depolarized" => spec = spec.with("delta", 0.2),
        "eqs" | "antiparallel_of" => spec = spec.with_inner(ZooSpec::new("spin")),
        _ => {}
    }
    match make_model(&spec) {
        Ok(m) => m
            .params
            .iter()
            .map(|p| {
                format!(
                    "{} in [{}, {}]{}",
                    p.name,
                    p.domain.lo,
                    p.domain.hi,
                    if p.periodic { " (periodic)" } else { "" }
                )
            })
            .collect::<Vec<_>>()
            .join(", "),
        Err(e) => format!("({e})"),
    }
}

pub fn zoo_list() -> Run {
    let mut report = String::from("models:\n");
    for (name, desc) in MODELS {
        let _ = writeln!(report, "  {name}: {desc}");
        let _ = writeln!(report, "    arguments: {}", lookup(MODEL_ARGS, name));
        let _ = writeln!(report, "    state parameters: {}", describe_params(name));
        let _ = writeln!(report, "    symmetry: {}", lookup(DOCUMENTED_GAS, name));
    }
    report.push_str("\nmeasurements:\n");
    for (name, desc) in MEASUREMENTS {
        let _ = writeln!(report, "  {name}: {desc}");
    }
    Run {
        report,
        files: vec![],
    }
}
