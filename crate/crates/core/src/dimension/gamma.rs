//! γ-type sums of scale norms and the per-map classification behind them.

use serde::Serialize;

use crate::fif::{FifModel, MapFunction};
use crate::region::Bracket;

/// Shape condition on `q_i` that admits the term `s_{i,j,r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// `j = 1`: `q_i` affine, any sign of `L`.
    Affine,
    /// `j = 2`: `q_i` concave, `s_i ≥ 0`, needs `L > 0`.
    Concave,
    /// `j = 3`: `q_i` convex, `s_i ≥ 0`, needs `L < 0`.
    Convex,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::Affine, Flavor::Concave, Flavor::Convex];

    pub fn index(self) -> u8 {
        match self {
            Flavor::Affine => 1,
            Flavor::Concave => 2,
            Flavor::Convex => 3,
        }
    }

    pub fn from_index(j: u8) -> Option<Flavor> {
        match j {
            1 => Some(Flavor::Affine),
            2 => Some(Flavor::Concave),
            3 => Some(Flavor::Convex),
            _ => None,
        }
    }

    /// Whether a witness with this `L` may be used with the flavor.
    pub fn admits(self, l: f64) -> bool {
        match self {
            Flavor::Affine => l != 0.0,
            Flavor::Concave => l > 0.0,
            Flavor::Convex => l < 0.0,
        }
    }

    fn shape_name(self) -> &'static str {
        match self {
            Flavor::Affine => "affine",
            Flavor::Concave => "concave",
            Flavor::Convex => "convex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaTerm {
    /// 1-based map index.
    pub map: usize,
    pub value: f64,
    pub reason: String,
}

/// `γ_{j,r} = Σ_i s_{i,j,r}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaClass {
    pub flavor: Flavor,
    pub axis: usize,
    pub value: f64,
    pub terms: Vec<GammaTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaReport {
    /// Encloses `γ = Σ ‖s_i‖∞`.
    pub gamma: Bracket,
    /// Encloses `γ₀ = Σ inf |s_i|`.
    pub gamma0: Bracket,
    pub classes: Vec<GammaClass>,
    pub eta_declared: f64,
    /// Declared `η` lowered to the smallest Hölder exponent of a
    /// non-constant `s_i` or `q_i`.
    pub eta_used: f64,
    pub eta_limited_by: Option<String>,
    /// `η′ = min{1, η}`.
    pub eta_prime: f64,
}

impl GammaReport {
    pub fn class(&self, flavor: Flavor, axis: usize) -> Option<&GammaClass> {
        self.classes.iter().find(|c| c.flavor == flavor && c.axis == axis)
    }

    /// `γ_{j,r}`, zero for axes the domain does not have.
    pub fn value(&self, flavor: Flavor, axis: usize) -> f64 {
        self.class(flavor, axis).map_or(0.0, |c| c.value)
    }

    pub fn eta_is_one(&self) -> bool {
        self.eta_prime >= 1.0 - 1e-12
    }
}

/// `s_{i,j,r}` with the reason it was admitted or zeroed.
pub(crate) fn term(s: &MapFunction, q: &MapFunction, flavor: Flavor, axis: usize) -> (f64, String) {
    let Some(c) = s.constant() else {
        return (0.0, "s not constant".into());
    };
    let shape_ok = match flavor {
        Flavor::Affine => q.facts.is_affine(axis),
        Flavor::Concave => q.facts.is_concave(axis),
        Flavor::Convex => q.facts.is_convex(axis),
    };
    let where_ = if axis == 0 { String::new() } else { format!(" in x{axis}") };
    if !shape_ok {
        return (0.0, format!("q not {}{where_}", flavor.shape_name()));
    }
    match flavor {
        Flavor::Affine => (c.abs(), format!("s constant, q affine{where_}")),
        _ if c < 0.0 => (0.0, "s negative".into()),
        _ => (c, format!("s non-negative constant, q {}{where_}", flavor.shape_name())),
    }
}

pub fn gammas(model: &FifModel) -> GammaReport {
    let s = model.scale();
    let q = model.displacement();
    let gamma = s.iter().fold(Bracket::exact(0.0), |a, f| a.add(&f.sup));
    let gamma0 = s.iter().fold(Bracket::exact(0.0), |a, f| a.add(&f.inf_abs));
    let axes = if model.domain().is_gasket() { 0 } else { model.domain().dim() };
    let mut classes = Vec::new();
    for flavor in Flavor::ALL {
        for axis in 0..=axes {
            let terms: Vec<GammaTerm> = s
                .iter()
                .zip(q)
                .enumerate()
                .map(|(i, (si, qi))| {
                    let (value, reason) = term(si, qi, flavor, axis);
                    GammaTerm { map: i + 1, value, reason }
                })
                .collect();
            let value = terms.iter().map(|t| t.value).sum();
            classes.push(GammaClass { flavor, axis, value, terms });
        }
    }

    let eta_declared = model.eta();
    let mut eta_used = eta_declared;
    let mut eta_limited_by = None;
    for (role, fs) in [("s", s), ("q", q)] {
        for (i, f) in fs.iter().enumerate() {
            if f.is_constant() {
                continue;
            }
            if let Some(h) = f.facts.holder {
                if h.exponent < eta_used {
                    eta_used = h.exponent;
                    eta_limited_by = Some(format!("{role}_{} is Hölder of order {}", i + 1, h.exponent));
                }
            }
        }
    }
    GammaReport { gamma, gamma0, classes, eta_declared, eta_used, eta_limited_by, eta_prime: eta_used.min(1.0) }
}
