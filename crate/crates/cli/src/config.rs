//! Run configuration (TOML).

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use imfree::model::{Model, StatePoint};
use imfree::povm::{LabeledMatrix, Povm, PovmFile};
use imfree::symmetry::{grid_points, invariant_povm};
use imfree::zoo::{canonical_gas, canonical_povm, make_model, ParamValue, ZooSpec};
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the subcommand when given.
    pub command: Option<Spanned<String>>,
    pub model: Option<ModelConfig>,
    pub points: Option<PointsConfig>,
    pub povm: Option<PovmConfig>,
    pub simulate: Option<SimulateConfig>,
    pub fig3: Option<Fig3Config>,
    pub asymmetry: Option<AsymmetryOptions>,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: Option<Spanned<String>>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    pub inner: Option<ZooSpec>,
    #[serde(default)]
    pub domain: BTreeMap<String, [f64; 2]>,
    /// JSON file with `rho` and `partials` at a single point.
    pub file: Option<Spanned<PathBuf>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    #[serde(default)]
    pub list: Vec<Vec<f64>>,
    pub per_axis: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmConfig {
    pub canonical: Option<Spanned<String>>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    pub invariant: Option<InvariantConfig>,
    pub file: Option<Spanned<PathBuf>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantConfig {
    #[serde(default = "one")]
    pub copies: usize,
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub true_x: Vec<f64>,
    pub n_c: u64,
    pub trials: usize,
    pub seed: Option<u64>,
    pub grid_per_axis: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Config {
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymmetryOptions {
    #[serde(default = "eight")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
}

fn eight() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// Single point given as matrices.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    rho: LabeledMatrix,
    #[serde(default)]
    partials: Vec<LabeledMatrix>,
}

/// Parsed config plus what is needed to report positions.
pub struct Loaded {
    pub cfg: RunConfig,
    src: String,
    path: PathBuf,
}

pub enum ModelSource {
    Zoo { spec: ZooSpec, model: Model },
    Point(StatePoint),
}

impl ModelSource {
    pub fn label(&self) -> String {
        match self {
            ModelSource::Zoo { spec, .. } => spec.to_string(),
            ModelSource::Point(_) => "matrix file".into(),
        }
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(src, path)
    }

    pub fn parse(src: String, path: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(&src)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self {
            cfg,
            src,
            path: path.to_path_buf(),
        })
    }

    pub fn empty() -> Self {
        Self {
            cfg: RunConfig::default(),
            src: String::new(),
            path: PathBuf::from("<defaults>"),
        }
    }

    /// Config error pointing at a span of the source.
    pub fn error_at(&self, span: Range<usize>, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!(
            "{}:{}: {msg}",
            self.path.display(),
            line_of(&self.src, span.start)
        ))
    }

    fn missing(&self, section: &str, command: &str) -> CliError {
        CliError::Config(format!(
            "{}: `{command}` needs a [{section}] section",
            self.path.display()
        ))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn check_command(&self, command: &str) -> Result<(), CliError> {
        match &self.cfg.command {
            Some(c) if c.get_ref() != command => Err(self.error_at(
                c.span(),
                format!("config is for `{}`, not `{command}`", c.get_ref()),
            )),
            _ => Ok(()),
        }
    }

    pub fn model(&self, command: &str) -> Result<ModelSource, CliError> {
        let m = self
            .cfg
            .model
            .as_ref()
            .ok_or_else(|| self.missing("model", command))?;
        match (&m.name, &m.file) {
            (Some(name), None) => {
                let spec = ZooSpec {
                    name: name.get_ref().clone(),
                    params: m.params.clone(),
                    inner: m.inner.clone().map(Box::new),
                    domain: m.domain.clone(),
                };
                let model = make_model(&spec).map_err(|e| self.error_at(name.span(), e))?;
                Ok(ModelSource::Zoo { spec, model })
            }
            (None, Some(file)) => {
                if !m.params.is_empty() || m.inner.is_some() || !m.domain.is_empty() {
                    return Err(self.error_at(
                        file.span(),
                        "a matrix file takes no params, inner or domain",
                    ));
                }
                let path = self.resolve(file.get_ref());
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    self.error_at(file.span(), format!("cannot read {}: {e}", path.display()))
                })?;
                let state: StateFile = serde_json::from_str(&text)
                    .map_err(|e| self.error_at(file.span(), format!("{}: {e}", path.display())))?;
                let rho = state
                    .rho
                    .to_matrix()
                    .map_err(|e| self.error_at(file.span(), e))?;
                let partials = state
                    .partials
                    .iter()
                    .map(|p| p.to_matrix())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| self.error_at(file.span(), e))?;
                if partials.iter().any(|p| p.dim() != rho.dim()) {
                    return Err(self.error_at(file.span(), "partials and rho differ in dimension"));
                }
                let report = imfree::model::validate_density(&rho);
                if !report.valid {
                    return Err(self.error_at(
                        file.span(),
                        format!("rho is not a density matrix: {report:?}"),
                    ));
                }
                Ok(ModelSource::Point(StatePoint::from_matrices(rho, partials)))
            }
            _ => Err(CliError::Config(format!(
                "{}: [model] needs exactly one of `name` or `file`",
                self.path.display()
            ))),
        }
    }

    /// Target points of a zoo model; `None` for a matrix-file model.
    pub fn points(&self, source: &ModelSource, command: &str) -> Result<Vec<Vec<f64>>, CliError> {
        match source {
            ModelSource::Point(_) => {
                if self.cfg.points.is_some() {
                    return Err(CliError::Config(format!(
                        "{}: [points] does not apply to a matrix-file model",
                        self.path.display()
                    )));
                }
                Ok(vec![vec![]])
            }
            ModelSource::Zoo { model, .. } => {
                let p = self
                    .cfg
                    .points
                    .as_ref()
                    .ok_or_else(|| self.missing("points", command))?;
                let pts = match (p.list.is_empty(), p.per_axis) {
                    (false, None) => p.list.clone(),
                    (true, Some(k)) if k >= 1 => grid_points(model, k),
                    _ => {
                        return Err(CliError::Config(format!(
                            "{}: [points] needs exactly one of `list` or `per_axis` (>= 1)",
                            self.path.display()
                        )))
                    }
                };
                for x in &pts {
                    model.check_domain(x).map_err(|e| {
                        CliError::Config(format!("{}: point {x:?}: {e}", self.path.display()))
                    })?;
                }
                Ok(pts)
            }
        }
    }

    pub fn povm(&self, source: &ModelSource, command: &str) -> Result<(Povm, String), CliError> {
        let p = self
            .cfg
            .povm
            .as_ref()
            .ok_or_else(|| self.missing("povm", command))?;
        let choices =
            p.canonical.is_some() as u8 + p.invariant.is_some() as u8 + p.file.is_some() as u8;
        if choices != 1 {
            return Err(CliError::Config(format!(
                "{}: [povm] needs exactly one of `canonical`, `invariant` or `file`",
                self.path.display()
            )));
        }
        if let Some(name) = &p.canonical {
            let spec = ZooSpec {
                name: name.get_ref().clone(),
                params: p.params.clone(),
                ..Default::default()
            };
            let povm =
                canonical_povm(name.get_ref(), &spec).map_err(|e| self.error_at(name.span(), e))?;
            return Ok((povm, spec.to_string()));
        }
        if let Some(inv) = &p.invariant {
            let ModelSource::Zoo { spec, .. } = source else {
                return Err(CliError::Config(format!(
                    "{}: an invariant POVM needs a zoo model with a known symmetry",
                    self.path.display()
                )));
            };
            let theta = canonical_gas(spec)
                .map_err(|e| CliError::Config(format!("{}: {e}", self.path.display())))?;
            let povm = invariant_povm(&theta, inv.copies, inv.seed)
                .map_err(|e| CliError::Config(format!("{}: {e}", self.path.display())))?;
            let seed = inv.seed.map_or("none".to_string(), |s| s.to_string());
            return Ok((
                povm,
                format!("invariant(copies={}, seed={seed})", inv.copies),
            ));
        }
        let file = p.file.as_ref().expect("one choice is set");
        let path = self.resolve(file.get_ref());
        let text = std::fs::read_to_string(&path).map_err(|e| {
            self.error_at(file.span(), format!("cannot read {}: {e}", path.display()))
        })?;
        let pf: PovmFile = serde_json::from_str(&text)
            .map_err(|e| self.error_at(file.span(), format!("{}: {e}", path.display())))?;
        let povm = Povm::from_file(&pf).map_err(|e| self.error_at(file.span(), e))?;
        Ok((povm, format!("file {}", file.get_ref().display())))
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf).or_else(|| {
            self.cfg
                .output
                .as_ref()
                .and_then(|o| o.dir.as_ref())
                .map(|d| self.resolve(d))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_reports_line() {
        let src = "[model]\nname = \"spin\"\ncolour = 3\n".to_string();
        let Err(CliError::Config(msg)) = Loaded::parse(src, Path::new("run.toml")) else {
            panic!("expected a config error");
        };
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_model_reports_line() {
        let src = "command = \"analyze\"\n\n[model]\nname = \"spinn\"\n".to_string();
        let l = Loaded::parse(src, Path::new("run.toml")).unwrap();
        let Err(CliError::Config(msg)) = l.model("analyze") else {
            panic!("expected a config error");
        };
        assert!(msg.starts_with("run.toml:4:"), "{msg}");
    }
}
