//! Run configuration: JSON schema v1, validated into a model specification.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use fif_core::expr::{parse_expr, Expr, Holder, ShapeFacts};
use fif_core::fif::{Displacement, Family, FifSpec};
use fif_core::ifs::Domain;
use fif_core::Point;

pub const SCHEMA_VERSION: u32 = 1;

/// One problem in a configuration, located by a JSON path such as
/// `scale[2].facts.holder`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.path.is_empty() { "." } else { &self.path }, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<FieldError>),
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid(vec![FieldError { path: path.into(), message: message.into() }])
    }

    pub fn fields(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(v) => v,
            ConfigError::Io { .. } => &[],
        }
    }
}

/// A number written either as a JSON number or as a constant expression
/// string such as `"4/15"` or `"3^0.5/2"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Number(f64),
    Text(String),
}

impl Num {
    fn value(&self, path: &str, errors: &mut Vec<FieldError>) -> f64 {
        let push = |errors: &mut Vec<FieldError>, m: String| {
            errors.push(FieldError { path: path.into(), message: m });
            f64::NAN
        };
        match self {
            Num::Number(x) => *x,
            Num::Text(s) => match parse_expr(s) {
                Ok(e) => match e.as_constant() {
                    Some(c) if c.is_finite() => c,
                    _ => push(errors, format!("`{s}` is not a finite constant")),
                },
                Err(e) => push(errors, format!("`{s}`: {e}")),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    knots: Vec<Num>,
    #[serde(default)]
    signature: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawDomain {
    Interval {
        knots: Vec<Num>,
        #[serde(default)]
        signature: Option<Vec<u8>>,
    },
    Cube {
        axes: Vec<RawAxis>,
    },
    Gasket {
        #[serde(default)]
        vertices: Option<Vec<Vec<Num>>>,
        #[serde(default = "one")]
        level: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    x: Vec<Num>,
    value: Num,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    points: Option<Vec<RawPoint>>,
    values: Option<Vec<Num>>,
    expr: Option<String>,
    constant: Option<Num>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHolder {
    exponent: Num,
    constant: Num,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFacts {
    #[serde(default)]
    affine: Vec<usize>,
    #[serde(default)]
    concave: Vec<usize>,
    #[serde(default)]
    convex: Vec<usize>,
    #[serde(default)]
    holder: Option<RawHolder>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    expr: String,
    #[serde(default)]
    facts: RawFacts,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    kmin: Option<usize>,
    kmax: Option<usize>,
    refine: Option<usize>,
    gamma_override: Option<Num>,
    depth: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    description: Option<String>,
    domain: RawDomain,
    data: RawData,
    scale: Value,
    displacement: Value,
    #[serde(default)]
    eta: Option<Num>,
    #[serde(default)]
    analysis: RawAnalysis,
}

/// Analysis settings; unset fields fall back to command defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Analysis {
    pub kmin: Option<usize>,
    pub kmax: Option<usize>,
    pub refine: Option<usize>,
    pub gamma_override: Option<f64>,
    pub depth: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub description: Option<String>,
    pub spec: FifSpec,
    pub analysis: Analysis,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_config(&text, &stem)
}

fn typed<T: for<'de> Deserialize<'de>>(v: &Value, prefix: &str) -> Result<T, FieldError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (_, ".") => prefix.to_string(),
            (true, p) => p.to_string(),
            (false, p) if p.starts_with('[') => format!("{prefix}{p}"),
            (false, p) => format!("{prefix}.{p}"),
        };
        FieldError { path, message: e.into_inner().to_string() }
    })
}

/// Parses configuration text; `default_name` names runs without a `name`.
pub fn parse_config(text: &str, default_name: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::at("", format!("not valid JSON: {e}")))?;
    let raw: RawConfig = typed(&value, "").map_err(|e| ConfigError::Invalid(vec![e]))?;
    let mut errors = Vec::new();
    if raw.version != SCHEMA_VERSION {
        errors.push(FieldError { path: "version".into(), message: format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.version) });
    }
    let domain = match build_domain(&raw.domain, &mut errors) {
        Some(d) => d,
        None => return Err(ConfigError::Invalid(errors)),
    };
    let n = domain.n_maps();
    let data = build_data(&raw.data, &domain, &mut errors);
    let scale = build_maps(&raw.scale, "scale", n, &mut errors);
    let displacement = build_displacement(&raw.displacement, n, &mut errors);
    let eta = raw.eta.as_ref().map_or(1.0, |e| e.value("eta", &mut errors));
    if !(eta > 0.0) {
        errors.push(FieldError { path: "eta".into(), message: format!("must be positive, got {eta}") });
    }
    let a = &raw.analysis;
    let analysis = Analysis {
        kmin: a.kmin,
        kmax: a.kmax,
        refine: a.refine,
        gamma_override: a.gamma_override.as_ref().map(|g| g.value("analysis.gamma_override", &mut errors)),
        depth: a.depth,
    };
    if let (Some(lo), Some(hi)) = (a.kmin, a.kmax) {
        if lo >= hi {
            errors.push(FieldError { path: "analysis".into(), message: format!("kmin {lo} must be below kmax {hi}") });
        }
    }
    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }
    let spec = FifSpec { domain, data: data.unwrap(), scale: scale.unwrap(), displacement: displacement.unwrap(), eta };
    Ok(RunConfig {
        name: raw.name.unwrap_or_else(|| default_name.to_string()),
        description: raw.description,
        spec,
        analysis,
    })
}

fn numbers(v: &[Num], path: &str, errors: &mut Vec<FieldError>) -> Vec<f64> {
    v.iter().enumerate().map(|(i, x)| x.value(&format!("{path}[{i}]"), errors)).collect()
}

fn signature(sig: &Option<Vec<u8>>, pieces: usize, path: &str, errors: &mut Vec<FieldError>) -> Vec<bool> {
    match sig {
        None => vec![false; pieces],
        Some(s) => {
            if s.len() != pieces {
                errors.push(FieldError { path: path.into(), message: format!("expected {pieces} entries, got {}", s.len()) });
            }
            s.iter()
                .enumerate()
                .map(|(i, &b)| {
                    if b > 1 {
                        errors.push(FieldError { path: format!("{path}[{i}]"), message: format!("must be 0 or 1, got {b}") });
                    }
                    b == 1
                })
                .collect()
        }
    }
}

fn build_domain(raw: &RawDomain, errors: &mut Vec<FieldError>) -> Option<Domain> {
    let start = errors.len();
    let result = match raw {
        RawDomain::Interval { knots, signature: sig } => {
            let k = numbers(knots, "domain.knots", errors);
            let s = signature(sig, k.len().saturating_sub(1), "domain.signature", errors);
            (errors.len() == start).then(|| Domain::interval(k, s))
        }
        RawDomain::Cube { axes } => {
            let axes: Vec<(Vec<f64>, Vec<bool>)> = axes
                .iter()
                .enumerate()
                .map(|(u, a)| {
                    let k = numbers(&a.knots, &format!("domain.axes[{u}].knots"), errors);
                    let s = signature(&a.signature, k.len().saturating_sub(1), &format!("domain.axes[{u}].signature"), errors);
                    (k, s)
                })
                .collect();
            (errors.len() == start).then(|| Domain::cube(axes))
        }
        RawDomain::Gasket { vertices, level } => {
            let v = match vertices {
                None => [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]],
                Some(v) if v.len() == 3 && v.iter().all(|p| p.len() == 2) => {
                    let mut out = [[0.0; 2]; 3];
                    for (j, p) in v.iter().enumerate() {
                        for (u, x) in p.iter().enumerate() {
                            out[j][u] = x.value(&format!("domain.vertices[{j}][{u}]"), errors);
                        }
                    }
                    out
                }
                Some(_) => {
                    errors.push(FieldError { path: "domain.vertices".into(), message: "expected three [x, y] pairs".into() });
                    return None;
                }
            };
            (errors.len() == start).then(|| Domain::gasket(v, *level))
        }
    }?;
    match result {
        Ok(d) => Some(d),
        Err(e) => {
            errors.push(FieldError { path: "domain".into(), message: e.to_string() });
            None
        }
    }
}

fn build_data(raw: &RawData, domain: &Domain, errors: &mut Vec<FieldError>) -> Option<Vec<(Point, f64)>> {
    let given = [raw.points.is_some(), raw.values.is_some(), raw.expr.is_some(), raw.constant.is_some()];
    if given.iter().filter(|&&b| b).count() != 1 {
        errors.push(FieldError { path: "data".into(), message: "give exactly one of points, values, expr, constant".into() });
        return None;
    }
    let nodes = domain.nodes();
    let start = errors.len();
    let out: Vec<(Point, f64)> = if let Some(points) = &raw.points {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let x = numbers(&p.x, &format!("data.points[{i}].x"), errors);
                if x.len() != domain.dim() {
                    errors.push(FieldError { path: format!("data.points[{i}].x"), message: format!("expected {} coordinates", domain.dim()) });
                }
                (x, p.value.value(&format!("data.points[{i}].value"), errors))
            })
            .collect()
    } else if let Some(values) = &raw.values {
        if values.len() != nodes.len() {
            errors.push(FieldError { path: "data.values".into(), message: format!("expected {} values (one per node), got {}", nodes.len(), values.len()) });
            return None;
        }
        nodes.into_iter().zip(numbers(values, "data.values", errors)).collect()
    } else if let Some(text) = &raw.expr {
        let e = match parse_expr(text) {
            Ok(e) if e.max_axis() <= domain.dim() => e,
            Ok(_) => {
                errors.push(FieldError { path: "data.expr".into(), message: format!("uses an axis beyond x{}", domain.dim()) });
                return None;
            }
            Err(err) => {
                errors.push(FieldError { path: "data.expr".into(), message: err.to_string() });
                return None;
            }
        };
        nodes.into_iter().map(|p| { let v = e.eval(&p); (p, v) }).collect()
    } else {
        let c = raw.constant.as_ref().unwrap().value("data.constant", errors);
        nodes.into_iter().map(|p| (p, c)).collect()
    };
    (errors.len() == start).then_some(out)
}

fn build_map(raw: &RawMap, path: &str, errors: &mut Vec<FieldError>) -> Option<(Expr, ShapeFacts)> {
    let e = match parse_expr(&raw.expr) {
        Ok(e) => e,
        Err(err) => {
            errors.push(FieldError { path: format!("{path}.expr"), message: format!("`{}`: {err}", raw.expr) });
            return None;
        }
    };
    let f = &raw.facts;
    let holder = f.holder.as_ref().map(|h| Holder {
        exponent: h.exponent.value(&format!("{path}.facts.holder.exponent"), errors),
        constant: h.constant.value(&format!("{path}.facts.holder.constant"), errors),
    });
    let facts = ShapeFacts {
        affine_in: f.affine.iter().copied().collect(),
        concave_in: f.concave.iter().copied().collect(),
        convex_in: f.convex.iter().copied().collect(),
        holder,
        ..Default::default()
    };
    Some((e, facts))
}

fn build_maps(v: &Value, role: &str, n: usize, errors: &mut Vec<FieldError>) -> Option<Vec<(Expr, ShapeFacts)>> {
    match v {
        Value::Array(items) => {
            let mut out = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("{role}[{i}]");
                match typed::<RawMap>(item, &path) {
                    Ok(raw) => out.extend(build_map(&raw, &path, errors)),
                    Err(e) => errors.push(e),
                }
            }
            if items.len() < n {
                let missing: Vec<String> = (items.len() + 1..=n).map(|i| i.to_string()).collect();
                errors.push(FieldError {
                    path: role.into(),
                    message: format!("{n} maps need {n} entries, got {}; missing map {}", items.len(), missing.join(", ")),
                });
            } else if items.len() > n {
                errors.push(FieldError { path: role.into(), message: format!("{n} maps need {n} entries, got {}", items.len()) });
            }
            (out.len() == n && items.len() == n).then_some(out)
        }
        Value::Object(o) if o.contains_key("all") && o.len() == 1 => {
            let path = format!("{role}.all");
            let raw: RawMap = typed(&o["all"], &path).map_err(|e| errors.push(e)).ok()?;
            let m = build_map(&raw, &path, errors)?;
            Some(vec![m; n])
        }
        _ => {
            errors.push(FieldError { path: role.into(), message: "expected a list with one entry per map or {\"all\": …}".into() });
            None
        }
    }
}

fn build_displacement(v: &Value, n: usize, errors: &mut Vec<FieldError>) -> Option<Displacement> {
    if let Value::Object(o) = v {
        if let Some(family) = o.get("solve") {
            if o.len() != 1 {
                errors.push(FieldError { path: "displacement".into(), message: "`solve` takes no other keys".into() });
                return None;
            }
            let family = match family.as_str() {
                Some("affine") => Family::Affine,
                Some("multilinear") => Family::Multilinear,
                Some("sg_affine") => Family::SgAffine,
                _ => {
                    errors.push(FieldError {
                        path: "displacement.solve".into(),
                        message: "expected \"affine\", \"multilinear\" or \"sg_affine\"".into(),
                    });
                    return None;
                }
            };
            return Some(Displacement::Solve(family));
        }
    }
    build_maps(v, "displacement", n, errors).map(Displacement::Given)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "version": 1,
        "domain": {"kind": "interval", "knots": ["0", "4/15", "3/5", 1]},
        "data": {"values": [0, "1/2", "1/3", 0]},
        "eta": "0.8",
        "scale": [{"expr": "1/4"}, {"expr": "1/2"}, {"expr": "3/4"}],
        "displacement": [
            {"expr": "x1^0.8/2", "facts": {"concave": [1], "holder": {"exponent": 0.8, "constant": "1/2"}}},
            {"expr": "-x1^2/6 + 1/2", "facts": {"concave": [1], "holder": {"exponent": 1, "constant": "1/3"}}},
            {"expr": "-x1/3 + 1/3"}
        ]
    }"#;

    #[test]
    fn loads_fractions_exactly() {
        let c = parse_config(BASE, "base").unwrap();
        assert_eq!(c.name, "base");
        let knots = &c.spec.domain.axes().unwrap()[0].knots;
        assert_eq!(knots[1], 4.0 / 15.0);
        assert_eq!(c.spec.data[2], (vec![0.6], 1.0 / 3.0));
        assert_eq!(c.spec.eta, 0.8);
        let Displacement::Given(q) = &c.spec.displacement else { panic!() };
        assert_eq!(q[1].1.holder.unwrap().constant, 1.0 / 3.0);
    }

    #[test]
    fn missing_map_is_named() {
        let text = BASE.replace(",\n            {\"expr\": \"-x1/3 + 1/3\"}", "");
        let err = parse_config(&text, "x").unwrap_err();
        let f = err.fields();
        assert_eq!(f.len(), 1, "{f:?}");
        assert_eq!(f[0].path, "displacement");
        assert!(f[0].message.contains("missing map 3"), "{}", f[0].message);
    }

    #[test]
    fn field_paths() {
        let err = parse_config(&BASE.replace("\"1/2\"}}}", "\"1/x\"}}}"), "x").unwrap_err();
        assert_eq!(err.fields()[0].path, "displacement[0].facts.holder.constant");
        let err = parse_config(&BASE.replace("\"concave\": [1], \"holder\": {\"exponent\": 1", "\"concave\": [1], \"holdr\": {\"exponent\": 1"), "x").unwrap_err();
        assert!(err.fields()[0].path.starts_with("displacement[1].facts"), "{err}");
        let err = parse_config(&BASE.replace("\"version\": 1", "\"version\": 2"), "x").unwrap_err();
        assert_eq!(err.fields()[0].path, "version");
        let err = parse_config(&BASE.replace("{\"values\": [0, \"1/2\", \"1/3\", 0]}", "{\"values\": [0]}"), "x").unwrap_err();
        assert_eq!(err.fields()[0].path, "data.values");
        assert!(parse_config("{", "x").is_err());
    }

    #[test]
    fn shorthand_forms() {
        let text = r#"{
            "version": 1,
            "domain": {"kind": "gasket", "vertices": [[0, 0], [1, 0], ["1/2", "3^0.5/2"]]},
            "data": {"expr": "x1*x2"},
            "scale": {"all": {"expr": "0.8"}},
            "displacement": {"solve": "sg_affine"},
            "analysis": {"kmin": 5, "kmax": 9, "gamma_override": "3/2"}
        }"#;
        let c = parse_config(text, "sg").unwrap();
        assert_eq!(c.spec.scale.len(), 3);
        assert_eq!(c.spec.data.len(), 6);
        assert_eq!(c.analysis.gamma_override, Some(1.5));
        assert!(matches!(c.spec.displacement, Displacement::Solve(Family::SgAffine)));
        let bad = text.replace("sg_affine", "harmonic");
        assert_eq!(parse_config(&bad, "x").unwrap_err().fields()[0].path, "displacement.solve");
    }
}
