use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn imfree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imfree"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn with_config(body: &str, args: &[&str]) -> (TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), body).unwrap();
    let mut all = vec!["--config", "run.toml"];
    all.extend_from_slice(args);
    let out = imfree(dir.path(), &all);
    (dir, out)
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn analyze_spin_curvature() {
    let cfg = "command = \"analyze\"\n[model]\nname = \"spin\"\n[points]\nlist = [[1.5707963267948966, 1.0]]\n";
    let (dir, out) = with_config(cfg, &["analyze", "--out", "o"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/analyze.json")).unwrap())
            .unwrap();
    let u = json["points"][0]["uhlmann"][0][1].as_f64().unwrap();
    assert!((u - 0.5).abs() < 1e-12);
    assert_eq!(json["points"][0]["las"]["verdict"], "imaginary_overlap");
}

#[test]
fn analyze_superdense_not_weakly_commutative() {
    let cfg = "[model]\nname = \"superdense\"\nparams = { r = 0.3 }\n[points]\nlist = [[0.2, 0.4, -0.3]]\n";
    let (dir, out) = with_config(cfg, &["analyze", "--out", "."]);
    assert!(out.status.success());
    let (h, rows) = csv_rows(&dir.path().join("analyze.csv"));
    assert_eq!(rows[0][column(&h, "weakly_commutative")], "false");
    assert_eq!(rows[0][column(&h, "schema_version")], "1");
}

#[test]
fn analyze_qutrit_reports_cycle() {
    let cfg = "[model]\nname = \"qutrit_las\"\nparams = { omega = [0.3, 0.5, 1.4] }\n[points]\nlist = [[0.0]]\n";
    let (_dir, out) = with_config(cfg, &["analyze"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("LAS: not found; phase cycle"), "{text}");
}

#[test]
fn povm_eval_noon_efficiency_one() {
    // Offset keeps every phase off the exact zero-probability points.
    let phis: Vec<String> = (0..100)
        .map(|k| format!("[{}]", std::f64::consts::TAU * (k as f64 + 0.37) / 100.0))
        .collect();
    let cfg = format!(
        "[model]\nname = \"noon\"\nparams = {{ n = 4 }}\n[points]\nlist = [{}]\n[povm]\ncanonical = \"noon_pm\"\n",
        phis.join(", ")
    );
    let (dir, out) = with_config(&cfg, &["povm-eval", "--out", "o"]);
    assert!(out.status.success());
    let (h, rows) = csv_rows(&dir.path().join("o/povm_eval.csv"));
    assert_eq!(rows.len(), 100);
    let e = column(&h, "efficiency");
    for r in &rows {
        assert!((r[e].parse::<f64>().unwrap() - 1.0).abs() <= 1e-6);
        assert_eq!(r[column(&h, "yang_optimal")], "true");
    }
}

#[test]
fn povm_eval_magnetometry_bipartite_on_lattice() {
    let cfg = "[model]\nname = \"magnetometry\"\nparams = { n = 2 }\n[points]\nlist = [[0.3, -0.2, 0.5], [0.7, 0.1, -0.4]]\n\
               [povm]\ncanonical = \"magnetometry_bipartite\"\nparams = { n = 2, k = 1 }\n";
    let (dir, out) = with_config(cfg, &["povm-eval", "--out", "."]);
    assert!(out.status.success());
    let (h, rows) = csv_rows(&dir.path().join("povm_eval.csv"));
    for r in &rows {
        assert!((r[column(&h, "efficiency")].parse::<f64>().unwrap() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn povm_eval_depolarized_gisin_suboptimal() {
    let cfg = "[model]\nname = \"antiparallel_depolarized\"\nparams = { delta = 0.2 }\n[points]\nlist = [[2.356194490192345, 0.39269908169872414]]\n\
               [povm]\ncanonical = \"gisin\"\n";
    let (dir, out) = with_config(cfg, &["povm-eval", "--out", "."]);
    assert!(out.status.success());
    let (h, rows) = csv_rows(&dir.path().join("povm_eval.csv"));
    assert!(rows[0][column(&h, "efficiency")].parse::<f64>().unwrap() < 1.0 - 1e-3);
    assert_eq!(rows[0][column(&h, "yang_optimal")], "");
}

#[test]
fn povm_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let povm = r#"{"elements": [
        {"label": "+", "dim": 2, "data": [[0.5, 0], [0.5, 0], [0.5, 0], [0.5, 0]]},
        {"label": "-", "dim": 2, "data": [[0.5, 0], [-0.5, 0], [-0.5, 0], [0.5, 0]]}]}"#;
    fs::write(dir.path().join("pm.json"), povm).unwrap();
    let cfg = "[model]\nname = \"noon\"\nparams = { n = 2 }\n[points]\nlist = [[0.4]]\n[povm]\nfile = \"pm.json\"\n";
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let out = imfree(dir.path(), &["povm-eval", "--config", "run.toml"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("efficiency: 1"));
}

#[test]
fn fig3_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = imfree(dir.path(), &["fig3", "--out", "."]);
    assert!(out.status.success());
    let (h, rows) = csv_rows(&dir.path().join("fig3.csv"));
    assert_eq!(
        h,
        [
            "schema_version",
            "delta",
            "basis",
            "eta",
            "phi",
            "dev_phi2",
            "bound",
            "qcrb"
        ]
    );
    assert_eq!(rows.len(), 91 * 4);
    let f = |r: &Vec<String>, c: &str| r[column(&h, c)].parse::<f64>().unwrap();
    for r in &rows {
        if f(r, "delta") == 0.0 {
            assert!((f(r, "dev_phi2") - f(r, "bound")).abs() < 1e-8);
        }
        if f(r, "delta") == 0.5 {
            assert!((f(r, "bound") - 4.0).abs() < 1e-12);
        }
        assert!(f(r, "dev_phi2") >= f(r, "qcrb") * (1.0 - 1e-12));
    }
}

#[test]
fn fig3_to_stdout_with_custom_deltas() {
    let (_dir, out) = with_config("[fig3]\ndeltas = [0.0, 0.25]\n", &["fig3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4);
}

const SIM: &str = "command = \"simulate\"\n[model]\nname = \"noon\"\nparams = { n = 3 }\ndomain = { phi = [0.0, 1.0471975511965976] }\n\
                   [povm]\ncanonical = \"noon_pm\"\n[simulate]\ntrue_x = [0.7]\nn_c = 500\ntrials = 30\n";

#[test]
fn simulate_is_reproducible() {
    let cfg = format!("{SIM}seed = 11\n");
    let (a, out) = with_config(&cfg, &["simulate", "--out", "o"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (b, _) = with_config(&cfg, &["simulate", "--out", "o"]);
    for f in ["trials.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join("o").join(f)).unwrap(),
            fs::read(b.path().join("o").join(f)).unwrap()
        );
    }
    let (c, _) = with_config(&cfg, &["simulate", "--out", "o", "--seed", "12"]);
    assert_ne!(
        fs::read(a.path().join("o/trials.csv")).unwrap(),
        fs::read(c.path().join("o/trials.csv")).unwrap()
    );
    let json: Value =
        serde_json::from_str(&fs::read_to_string(c.path().join("o/summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["seed"], 12);
}

#[test]
fn simulate_records_generated_seed() {
    let (dir, out) = with_config(SIM, &["simulate", "--out", "."]);
    assert!(out.status.success());
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["seed_generated"], true);
    assert!(json["seed"].is_u64());
    assert_eq!(json["schema_version"], 1);
}

#[test]
fn asymmetry_grid() {
    let cfg = "[model]\nname = \"qutrit_las\"\n[points]\nper_axis = 3\n[asymmetry]\nstarts = 10\n";
    let (dir, out) = with_config(cfg, &["asymmetry", "--out", "."]);
    assert!(out.status.success());
    let (h, rows) = csv_rows(&dir.path().join("asymmetry.csv"));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r[column(&h, "las_found")], "false");
        assert!(r[column(&h, "m_sq")].parse::<f64>().unwrap() > 1e-3);
    }
}

#[test]
fn zoo_list_names_everything() {
    let out = imfree(Path::new("."), &["zoo", "list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "spin",
        "noon",
        "magnetometry",
        "qutrit_las",
        "antiparallel_of",
        "gisin",
        "noon_pm",
    ] {
        assert!(text.contains(name));
    }
}

#[test]
fn unknown_key_is_config_error_with_line() {
    let (_dir, out) = with_config(
        "[model]\nname = \"spin\"\n[points]\nlist = [[1.0, 1.0]]\nstep = 2\n",
        &["analyze"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn bad_model_parameter_is_config_error() {
    let (_dir, out) = with_config(
        "[model]\nname = \"noon\"\nparams = { n = 2.5 }\n[points]\nlist = [[0.1]]\n",
        &["analyze"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("run.toml:2:"));
}

#[test]
fn missing_config_is_config_error() {
    let out = imfree(Path::new("."), &["analyze"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_hermitian_partial_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let state = r#"{"rho": {"dim": 2, "data": [[0.6, 0], [0, 0], [0, 0], [0.4, 0]]},
                    "partials": [{"dim": 2, "data": [[0, 0], [1, 0], [0, 0], [0, 0]]}]}"#;
    fs::write(dir.path().join("s.json"), state).unwrap();
    fs::write(dir.path().join("run.toml"), "[model]\nfile = \"s.json\"\n").unwrap();
    let out = imfree(dir.path(), &["analyze", "--config", "run.toml"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn matrix_file_model() {
    let dir = tempfile::tempdir().unwrap();
    let state = r#"{"rho": {"dim": 2, "data": [[0.6, 0], [0, 0], [0, 0], [0.4, 0]]},
                    "partials": [{"dim": 2, "data": [[0, 0], [0.1, 0], [0.1, 0], [0, 0]]}]}"#;
    fs::write(dir.path().join("s.json"), state).unwrap();
    fs::write(dir.path().join("run.toml"), "[model]\nfile = \"s.json\"\n").unwrap();
    let out = imfree(dir.path(), &["analyze", "--config", "run.toml"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("LAS: found"));
}
