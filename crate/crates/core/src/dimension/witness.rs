//! Non-collinear triples of interpolation points and the covering check
//! they drive.

use serde::Serialize;
use thiserror::Error;

use super::gamma::{term, Flavor};
use crate::fif::FifModel;
use crate::ifs::CellAddress;
use crate::region::Point;

/// Relative (to `|K|`) tolerance for collinearity and axis alignment.
const GEOM_TOL: f64 = 1e-10;
/// Slack on the covering inequality.
const HEIGHT_TOL: f64 = 1e-9;

/// `y₃ = (1−λ) y₁ + λ y₂` with `L = p(y₃) − ((1−λ) p(y₁) + λ p(y₂)) ≠ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollinearWitness {
    /// `0`: any direction; `1..=m`: the three points differ only in `x_r`.
    pub r: usize,
    pub y1: Point,
    pub y2: Point,
    pub y3: Point,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error("point {0:?} is not an interpolation node")]
    NotInV(Point),
    #[error("y3 is not strictly between y1 and y2 on their segment")]
    NotCollinear,
    #[error("points differ outside axis {0}")]
    NotAxisAligned(usize),
    #[error("axis {0} is not an axis of the domain")]
    Axis(usize),
    #[error("the three data points are collinear (L = 0)")]
    Degenerate,
    #[error("map letter {0} is out of range")]
    Letter(usize),
    #[error("flavor {flavor} needs the other sign of L = {l}")]
    Flavor { flavor: u8, l: f64 },
}

fn lambda_of(a: &[f64], b: &[f64], c: &[f64], tol: f64) -> Option<f64> {
    let d: Vec<f64> = c.iter().zip(a).map(|(c, a)| c - a).collect();
    let dd: f64 = d.iter().map(|x| x * x).sum();
    if dd <= tol * tol {
        return None;
    }
    let lambda = b.iter().zip(a).zip(&d).map(|((b, a), d)| (b - a) * d).sum::<f64>() / dd;
    let off: f64 = (0..a.len()).map(|u| (b[u] - a[u] - lambda * d[u]).powi(2)).sum::<f64>().sqrt();
    let margin = tol / dd.sqrt();
    (off <= tol && lambda > margin && lambda < 1.0 - margin).then_some(lambda)
}

fn aligned(a: &[f64], b: &[f64], r: usize, tol: f64) -> bool {
    (0..a.len()).all(|u| u + 1 == r || (a[u] - b[u]).abs() <= tol)
}

fn data_scale(model: &FifModel) -> f64 {
    model.data().iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

impl CollinearWitness {
    /// Witness from three nodes, `y₃` between `y₁` and `y₂`.
    pub fn from_points(model: &FifModel, r: usize, y1: &[f64], y2: &[f64], y3: &[f64]) -> Result<Self, WitnessError> {
        let d = model.domain();
        if r > 0 && (d.is_gasket() || r > d.dim()) {
            return Err(WitnessError::Axis(r));
        }
        let tol = GEOM_TOL * model.geometry().diameter;
        let value = |y: &[f64]| model.data_at(y).ok_or_else(|| WitnessError::NotInV(y.to_vec()));
        let (p1, p2, p3) = (value(y1)?, value(y2)?, value(y3)?);
        if r > 0 && !(aligned(y1, y2, r, tol) && aligned(y1, y3, r, tol)) {
            return Err(WitnessError::NotAxisAligned(r));
        }
        let lambda = lambda_of(y1, y3, y2, tol).ok_or(WitnessError::NotCollinear)?;
        let l = p3 - ((1.0 - lambda) * p1 + lambda * p2);
        if l.abs() <= 1e-12 * data_scale(model) {
            return Err(WitnessError::Degenerate);
        }
        Ok(CollinearWitness { r, y1: y1.to_vec(), y2: y2.to_vec(), y3: y3.to_vec(), lambda, l })
    }

    fn describe(&self) -> String {
        format!("y1={:?}, y2={:?}, y3={:?}, λ={}, L={}", self.y1, self.y2, self.y3, self.lambda, self.l)
    }
}

impl std::fmt::Display for CollinearWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Witness on axis `r` maximizing `|L|`; `None` when all triples are
/// collinear in the graph.
pub fn find_witness(model: &FifModel, r: usize) -> Option<CollinearWitness> {
    find_witness_where(model, r, |_| true)
}

/// Like [`find_witness`], restricted to witnesses whose `L` passes `accept`.
pub fn find_witness_where(model: &FifModel, r: usize, accept: impl Fn(f64) -> bool) -> Option<CollinearWitness> {
    let d = model.domain();
    if r > 0 && (d.is_gasket() || r > d.dim()) {
        return None;
    }
    let tol = GEOM_TOL * model.geometry().diameter;
    let nodes = model.nodes();
    let p = model.data();
    let floor = 1e-12 * data_scale(model);
    let mut best: Option<CollinearWitness> = None;
    for a in 0..nodes.len() {
        for c in a + 1..nodes.len() {
            if r > 0 && !aligned(&nodes[a], &nodes[c], r, tol) {
                continue;
            }
            for b in 0..nodes.len() {
                if b == a || b == c {
                    continue;
                }
                let Some(lambda) = lambda_of(&nodes[a], &nodes[b], &nodes[c], tol) else { continue };
                let l = p[b] - ((1.0 - lambda) * p[a] + lambda * p[c]);
                if l.abs() <= floor || !accept(l) {
                    continue;
                }
                if best.as_ref().is_none_or(|w| l.abs() > w.l.abs()) {
                    best = Some(CollinearWitness {
                        r,
                        y1: nodes[a].clone(),
                        y2: nodes[c].clone(),
                        y3: nodes[b].clone(),
                        lambda,
                        l,
                    });
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightCheck {
    pub omega: CellAddress,
    /// `|f*(l_ω y₃) − ((1−λ) f*(l_ω y₁) + λ f*(l_ω y₂))|`.
    pub height: f64,
    /// `Π_j s_{ω_j, flavor, r} |L|`.
    pub required: f64,
    pub pass: bool,
}

/// `f*(l_ω(y))` for a node `y`, folded through `g` along `ω`.
fn value_at_image(model: &FifModel, omega: &CellAddress, y: &[f64]) -> f64 {
    let maps = model.domain().maps();
    let mut x = y.to_vec();
    let mut v = model.data_at(y).expect("witness points are nodes");
    for &i in omega.0.iter().rev() {
        v = model.g(i, &x, v);
        x = maps[i].apply(&x);
    }
    v
}

/// Checks that the graph over `l_ω(K)` spans the height the witness forces.
pub fn witness_height_check(
    model: &FifModel,
    omega: &CellAddress,
    w: &CollinearWitness,
    flavor: Flavor,
) -> Result<HeightCheck, WitnessError> {
    if !flavor.admits(w.l) {
        return Err(WitnessError::Flavor { flavor: flavor.index(), l: w.l });
    }
    let n = model.n_maps();
    if let Some(&bad) = omega.0.iter().find(|&&i| i >= n) {
        return Err(WitnessError::Letter(bad + 1));
    }
    let (s, q) = (model.scale(), model.displacement());
    let product: f64 = omega.0.iter().map(|&i| term(&s[i], &q[i], flavor, w.r).0).product();
    let required = product * w.l.abs();
    let f1 = value_at_image(model, omega, &w.y1);
    let f2 = value_at_image(model, omega, &w.y2);
    let f3 = value_at_image(model, omega, &w.y3);
    let height = (f3 - ((1.0 - w.lambda) * f1 + w.lambda * f2)).abs();
    Ok(HeightCheck { omega: omega.clone(), height, required, pass: height >= required - HEIGHT_TOL })
}
