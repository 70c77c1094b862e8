//! Command implementations. Each returns its stdout text or a [`CliError`]
//! carrying the process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use fif_core::dimension::{bounds, empirical_from_ladder, reconcile, resolve_window, BoxError, EmpiricalEstimate, ReconcileOptions};
use fif_core::fif::{cell_budget, ConsistencyError, FifModel, ModelError, SampleError, SampleLadder, DEFAULT_REFINE};
use fif_core::Point;

use crate::config::{load_config, ConfigError, RunConfig};
use crate::report::{sample_csv, to_json, FullReport, ModelSummary, ValidationReport, INTERPOLATION_TOL};
use crate::svg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
    #[error("model: {0}")]
    Model(ModelError),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("budget: {0}")]
    Budget(String),
    #[error("{0}")]
    Inconsistent(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Model(e) if is_config_error(e) => 1,
            CliError::Model(_) | CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Inconsistent(_) => 4,
        }
    }
}

/// Errors in what the config says rather than in the mathematics.
fn is_config_error(e: &ModelError) -> bool {
    matches!(
        e,
        ModelError::MapCount { .. }
            | ModelError::MissingData(_)
            | ModelError::ExtraData(_)
            | ModelError::DuplicateData(_)
            | ModelError::AxisOutOfRange { .. }
    )
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::Budget { .. } => CliError::Budget(format!("{e}; raise FIF_CELL_BUDGET or lower the level")),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<BoxError> for CliError {
    fn from(e: BoxError) -> Self {
        match e {
            BoxError::Sample(s) => s.into(),
            BoxError::Window { .. } => CliError::Config(ConfigError::Invalid(vec![crate::config::FieldError {
                path: "analysis".into(),
                message: e.to_string(),
            }])),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ConsistencyError> for CliError {
    fn from(e: ConsistencyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Overrides from the command line; each wins over the config's analysis block.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub depth: Option<usize>,
    pub kmin: Option<usize>,
    pub kmax: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn build_model(cfg: &RunConfig) -> Result<FifModel, CliError> {
    FifModel::new(cfg.spec.clone()).map_err(CliError::Model)
}

fn load(path: &Path) -> Result<(RunConfig, FifModel), CliError> {
    let cfg = load_config(path)?;
    let model = build_model(&cfg)?;
    Ok((cfg, model))
}

/// `max |f*(v) - p(v)|` over the interpolation nodes.
pub fn interpolation_error(model: &FifModel) -> Result<f64, CliError> {
    let table = model.evaluate_on_vk(1)?;
    let mut worst: f64 = 0.0;
    for (p, v) in table.points_values(model.domain()) {
        let data = model.data_at(&p).ok_or_else(|| CliError::Validation(format!("V_1 point {p:?} has no data")))?;
        worst = worst.max((v - data).abs());
    }
    Ok(worst)
}

pub fn validation(cfg: &RunConfig, model: &FifModel) -> Result<ValidationReport, CliError> {
    let interpolation_error = interpolation_error(model)?;
    let wd = model.well_definedness().clone();
    let pass = wd.ok() && interpolation_error <= INTERPOLATION_TOL;
    Ok(ValidationReport {
        name: cfg.name.clone(),
        join_up_residual: model.join_up_residual(),
        well_definedness: wd,
        interpolation_error,
        pass,
        model: ModelSummary::of(model),
    })
}

pub fn cmd_validate(path: &Path) -> Result<String, CliError> {
    let (cfg, model) = load(path)?;
    let report = validation(&cfg, &model)?;
    if !report.pass {
        return Err(CliError::Validation(to_json(&report)));
    }
    Ok(to_json(&report))
}

/// Points of `V_{depth+1}` with their exact values; depth 0 is the data.
pub fn sample_points(model: &FifModel, depth: usize) -> Result<Vec<(Point, f64)>, CliError> {
    let level = depth + 1;
    let cells = (model.n_maps() as f64).powi(level as i32);
    if cells > cell_budget() as f64 {
        return Err(SampleError::Budget { level, cells, budget: cell_budget() }.into());
    }
    Ok(model.evaluate_on_vk(level)?.points_values(model.domain()))
}

pub fn cmd_sample(path: &Path, flags: &Flags) -> Result<String, CliError> {
    let (cfg, model) = load(path)?;
    let depth = flags.depth.or(cfg.analysis.depth).unwrap_or(0);
    Ok(sample_csv(model.domain().dim(), &sample_points(&model, depth)?))
}

pub fn cmd_bounds(path: &Path) -> Result<String, CliError> {
    let (cfg, model) = load(path)?;
    Ok(to_json(&bounds(&model, cfg.analysis.gamma_override)))
}

pub fn empirical(cfg: &RunConfig, model: &FifModel, flags: &Flags) -> Result<EmpiricalEstimate, CliError> {
    let (kmin, kmax) = resolve_window(model.n_maps(), flags.kmin.or(cfg.analysis.kmin), flags.kmax.or(cfg.analysis.kmax))?;
    let ladder = SampleLadder::build(model, kmax, cfg.analysis.refine.unwrap_or(DEFAULT_REFINE), cell_budget())?;
    Ok(empirical_from_ladder(model, &ladder, kmin, kmax)?)
}

pub fn cmd_boxdim(path: &Path, flags: &Flags) -> Result<String, CliError> {
    let (cfg, model) = load(path)?;
    Ok(to_json(&empirical(&cfg, &model, flags)?))
}

/// Finest vertex level with at most `max_points` points of `V_k`.
fn plot_level(model: &FifModel, max_points: f64) -> usize {
    let n = model.n_maps() as f64;
    let per_cell = model.domain().v0().len() as f64;
    let mut k = 1;
    while per_cell * n.powi(k as i32 + 1) <= max_points && k < 30 {
        k += 1;
    }
    k
}

fn graph_svg(cfg: &RunConfig, model: &FifModel) -> Result<String, CliError> {
    let dim = model.domain().dim();
    let title = format!("{}: graph of f*", cfg.name);
    if dim == 1 {
        let k = plot_level(model, 20_000.0);
        let mut pts: Vec<(f64, f64)> =
            model.evaluate_on_vk(k)?.points_values(model.domain()).into_iter().map(|(p, v)| (p[0], v)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let data: Vec<(f64, f64)> = model.nodes().iter().zip(model.data()).map(|(p, v)| (p[0], *v)).collect();
        Ok(svg::graph_interval(&pts, &data, &title))
    } else {
        let k = plot_level(model, 12_000.0);
        let pts: Vec<(f64, f64, f64)> =
            model.evaluate_on_vk(k)?.points_values(model.domain()).into_iter().map(|(p, v)| (p[0], p[1], v)).collect();
        Ok(svg::graph_planar(&pts, &title))
    }
}

/// Everything at once: `report.json`, `sample.csv`, `graph.svg` and
/// `loglog.svg` in the output directory. Files are written before an
/// inconsistency is reported.
pub fn cmd_report(path: &Path, flags: &Flags) -> Result<String, CliError> {
    let (cfg, model) = load(path)?;
    let out = flags.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let validation = validation(&cfg, &model)?;
    let opts = ReconcileOptions {
        kmin: flags.kmin.or(cfg.analysis.kmin),
        kmax: flags.kmax.or(cfg.analysis.kmax),
        refine: cfg.analysis.refine,
        gamma_override: cfg.analysis.gamma_override,
    };
    let bounds = reconcile(&model, &opts)?;
    let depth = flags.depth.or(cfg.analysis.depth).unwrap_or(0);
    let csv = sample_csv(model.domain().dim(), &sample_points(&model, depth)?);
    let graph = graph_svg(&cfg, &model)?;
    let est = bounds.empirical.as_ref().expect("reconcile fits a slope");
    let loglog = svg::loglog(est, bounds.best_lower, bounds.best_upper, &format!("{}: box counting", cfg.name));
    let full = FullReport { name: cfg.name.clone(), description: cfg.description.clone(), validation, bounds };
    let json = to_json(&full);
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    for (file, body) in [("report.json", &json), ("sample.csv", &csv), ("graph.svg", &graph), ("loglog.svg", &loglog)] {
        let p = out.join(file);
        fs::write(&p, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
    }
    if full.bounds.inconsistent() {
        return Err(CliError::Inconsistent(full.bounds.flags.join("; ")));
    }
    if !full.validation.pass {
        return Err(CliError::Validation(format!("see {}", out.join("report.json").display())));
    }
    Ok(json)
}
