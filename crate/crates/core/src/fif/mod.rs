//! Validated fractal interpolation models and their exact evaluation.
//!
//! A model is the data `p` on the interpolation nodes `V = ∪ l_i(V_0)`
//! together with maps `g_i(x, z) = s_i(x) z + q_i(x)`. Its fixed point `f*`
//! satisfies `f*(l_i(x)) = s_i(x) f*(x) + q_i(x)` and `f*|_V = p`.

mod eval;
mod sample;
mod solve;
mod table;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{audit_shape, inf_abs, range_bracket, sup_norm, BracketError, Expr, ShapeFacts, ShapeViolation};
use crate::expr::shape::{default_depth, degrees};
use crate::ifs::{Domain, DomainError, DomainGeometry, PointSet};
use crate::region::{Bracket, Point, Region};

pub use eval::EvalError;
pub use sample::{cell_budget, graph_sample, CellBracket, GraphSample, Layout, SampleError, SampleLadder, DEFAULT_REFINE};
pub use solve::solve_linear;
pub use table::{ConsistencyError, GridTable, MeshTable, VertexTable};

/// Join-up residual accepted at model construction.
pub const JOIN_UP_TOL: f64 = 1e-9;
/// Relative tolerance of shape audits.
pub const AUDIT_TOL: f64 = 1e-9;

/// Closed-form families for solved displacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `a + b x` on an interval.
    Affine,
    /// `Σ_J e_J Π_{j∈J} x_j` on a cube.
    Multilinear,
    /// `a + b x + c y` on the gasket's plane.
    SgAffine,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Displacement {
    Given(Vec<(Expr, ShapeFacts)>),
    Solve(Family),
}

/// Unvalidated model description.
#[derive(Debug, Clone, PartialEq)]
pub struct FifSpec {
    pub domain: Domain,
    /// Values of `p` on `V`, in any order.
    pub data: Vec<(Point, f64)>,
    pub scale: Vec<(Expr, ShapeFacts)>,
    pub displacement: Displacement,
    /// Declared common Hölder / oscillation exponent.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("the domain has {0} map(s); at least two contractions are required")]
    TooFewMaps(usize),
    #[error("{role} list has {got} entries but the domain has {expected} maps")]
    MapCount { role: &'static str, expected: usize, got: usize },
    #[error("{role}_{map} uses x{axis} on a {dim}-dimensional domain")]
    AxisOutOfRange { role: &'static str, map: usize, axis: usize, dim: usize },
    #[error("{role}_{map}: declared shape facts fail the audit: {violations:?}")]
    Shape { role: &'static str, map: usize, violations: Vec<ShapeViolation> },
    #[error("{role}_{map}: {source}")]
    Bracket { role: &'static str, map: usize, source: BracketError },
    #[error("s_{map} has sup norm up to {hi}, not below 1")]
    NotContractive { map: usize, hi: f64 },
    #[error("no data value for interpolation node {0:?}")]
    MissingData(Point),
    #[error("data point {0:?} is not an interpolation node")]
    ExtraData(Point),
    #[error("data point {0:?} given twice")]
    DuplicateData(Point),
    #[error("family {family:?} does not fit this domain")]
    FamilyMismatch { family: Family },
    #[error("singular join-up system for map {0}")]
    Singular(usize),
    #[error("join-up residual {residual:e} at map {map}, vertex {vertex} exceeds {JOIN_UP_TOL:e}")]
    JoinUp { residual: f64, map: usize, vertex: usize },
    #[error("map family is not well defined on shared faces: {0:?}")]
    NotWellDefined(Vec<String>),
    #[error("eta must be positive, got {0}")]
    Eta(f64),
}

/// One scale or displacement function with its audited facts and brackets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapFunction {
    pub expr: Expr,
    pub facts: ShapeFacts,
    /// Encloses `‖e‖∞` over `K`.
    pub sup: Bracket,
    /// Encloses `inf |e|` over `K`.
    pub inf_abs: Bracket,
    /// Encloses the range of `e` over `K`.
    pub range: Bracket,
}

impl MapFunction {
    fn build(role: &'static str, map: usize, expr: Expr, declared: &ShapeFacts, region: &Region) -> Result<Self, ModelError> {
        let m = region.dim();
        if expr.max_axis() > m {
            return Err(ModelError::AxisOutOfRange { role, map, axis: expr.max_axis(), dim: m });
        }
        let facts = declared.normalized(m).with_structure(&expr, region);
        let samples = match (region, m) {
            (Region::Triangle(_), _) => 17,
            (_, 1) => 33,
            (_, 2) => 17,
            _ => 9,
        };
        let violations = audit_shape(&expr, &facts, region, samples, AUDIT_TOL);
        if !violations.is_empty() {
            return Err(ModelError::Shape { role, map, violations });
        }
        let depth = default_depth(region);
        let h = facts.holder.as_ref();
        let wrap = |source| ModelError::Bracket { role, map, source };
        let sup = sup_norm(&expr, region, depth, h).map_err(wrap)?;
        let inf = inf_abs(&expr, region, depth, h).map_err(wrap)?;
        let range = range_bracket(&expr, region, depth, h).map_err(wrap)?;
        Ok(MapFunction { expr, facts, sup, inf_abs: inf, range })
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }

    pub fn is_constant(&self) -> bool {
        self.facts.is_constant
    }

    /// Constant value when the function is constant.
    pub fn constant(&self) -> Option<f64> {
        if self.facts.is_constant {
            self.facts.constant_value
        } else {
            None
        }
    }

    /// Multilinear in the coordinates: affine along every axis.
    pub fn is_multilinear(&self, m: usize) -> bool {
        (1..=m).all(|u| self.facts.is_affine(u))
            || degrees(&self.expr).is_some_and(|d| d.per_axis.iter().all(|&x| x <= 1))
    }

    /// `H d^η` bound on the oscillation over a set of diameter `d`.
    pub fn oscillation_bound(&self, d: f64) -> f64 {
        if self.facts.is_constant {
            return 0.0;
        }
        let h = self.facts.holder.expect("audited non-constant functions carry Hölder facts");
        if h.exponent == 1.0 {
            h.constant * d
        } else {
            h.constant * d.powf(h.exponent)
        }
    }
}

/// Outcome of the shared-face check for cube domains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellDefinedness {
    pub route: String,
    pub violations: Vec<String>,
}

impl WellDefinedness {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A validated model with its derived constants.
#[derive(Debug, Clone)]
pub struct FifModel {
    domain: Domain,
    geometry: DomainGeometry,
    nodes: Vec<Point>,
    node_index: PointSet,
    data: Vec<f64>,
    v0_values: Vec<f64>,
    s: Vec<MapFunction>,
    q: Vec<MapFunction>,
    solved: Option<Family>,
    s_norm: Bracket,
    m_bound: Bracket,
    range: Bracket,
    eta: f64,
    join_up: f64,
    well_defined: WellDefinedness,
}

impl FifModel {
    pub fn new(spec: FifSpec) -> Result<FifModel, ModelError> {
        let FifSpec { domain, data, scale, displacement, eta } = spec;
        if !(eta > 0.0) {
            return Err(ModelError::Eta(eta));
        }
        let n = domain.n_maps();
        let geometry = domain.geometry();
        if n < 2 || !(geometry.lambda > 1.0) {
            return Err(ModelError::TooFewMaps(n));
        }
        if scale.len() != n {
            return Err(ModelError::MapCount { role: "scale", expected: n, got: scale.len() });
        }
        let region = domain.region().clone();
        let s: Vec<MapFunction> = scale
            .into_iter()
            .enumerate()
            .map(|(i, (e, f))| MapFunction::build("s", i + 1, e, &f, &region))
            .collect::<Result<_, _>>()?;
        for (i, si) in s.iter().enumerate() {
            if !(si.sup.hi < 1.0) {
                return Err(ModelError::NotContractive { map: i + 1, hi: si.sup.hi });
            }
        }

        let nodes = domain.nodes();
        let mut node_index = PointSet::new(domain.dim(), geometry.diameter);
        for v in &nodes {
            node_index.insert(v.clone());
        }
        let mut values = vec![f64::NAN; nodes.len()];
        for (p, v) in &data {
            match node_index.find(p) {
                None => return Err(ModelError::ExtraData(p.clone())),
                Some(j) if !values[j].is_nan() => return Err(ModelError::DuplicateData(p.clone())),
                Some(j) => values[j] = *v,
            }
        }
        if let Some(j) = values.iter().position(|v| v.is_nan()) {
            return Err(ModelError::MissingData(nodes[j].clone()));
        }
        let lookup = |p: &[f64]| values[node_index.find(p).expect("images of V_0 are nodes")];
        let v0_values: Vec<f64> = domain.v0().iter().map(|v| lookup(v)).collect();

        let (q_exprs, solved) = match displacement {
            Displacement::Given(q) => {
                if q.len() != n {
                    return Err(ModelError::MapCount { role: "displacement", expected: n, got: q.len() });
                }
                (q, None)
            }
            Displacement::Solve(family) => {
                (solve::solve_q(&domain, &s, &v0_values, &lookup, family)?, Some(family))
            }
        };
        let q: Vec<MapFunction> = q_exprs
            .into_iter()
            .enumerate()
            .map(|(i, (e, f))| MapFunction::build("q", i + 1, e, &f, &region))
            .collect::<Result<_, _>>()?;

        let mut join_up: f64 = 0.0;
        for (i, l) in domain.maps().iter().enumerate() {
            for (j, k) in domain.v0().iter().enumerate() {
                let r = (q[i].eval(k) - lookup(&l.apply(k)) + s[i].eval(k) * v0_values[j]).abs();
                if r > JOIN_UP_TOL {
                    return Err(ModelError::JoinUp { residual: r, map: i + 1, vertex: j + 1 });
                }
                join_up = join_up.max(r);
            }
        }

        let s_norm = s.iter().fold(Bracket::exact(0.0), |a, f| Bracket::new(a.lo.max(f.sup.lo), a.hi.max(f.sup.hi)));
        let q_norm = q.iter().fold(Bracket::exact(0.0), |a, f| Bracket::new(a.lo.max(f.sup.lo), a.hi.max(f.sup.hi)));
        let m_bound = Bracket::new(q_norm.lo / (1.0 - s_norm.lo), q_norm.hi / (1.0 - s_norm.hi));

        let well_defined = check_well_defined(&domain, &s, &q, m_bound.hi);
        if !well_defined.ok() {
            return Err(ModelError::NotWellDefined(well_defined.violations));
        }
        let range = range_enclosure(&s, &q, m_bound.hi);
        Ok(FifModel {
            domain,
            geometry,
            nodes,
            node_index,
            data: values,
            v0_values,
            s,
            q,
            solved,
            s_norm,
            m_bound,
            range,
            eta,
            join_up,
            well_defined,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn geometry(&self) -> &DomainGeometry {
        &self.geometry
    }

    pub fn n_maps(&self) -> usize {
        self.s.len()
    }

    /// Interpolation nodes `V` in the domain's canonical order.
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// `p` on [`Self::nodes`].
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `p(v)` for a node `v`.
    pub fn data_at(&self, v: &[f64]) -> Option<f64> {
        self.node_index.find(v).map(|j| self.data[j])
    }

    /// `p` on `V_0`, in the domain's corner order.
    pub fn v0_values(&self) -> &[f64] {
        &self.v0_values
    }

    pub fn scale(&self) -> &[MapFunction] {
        &self.s
    }

    pub fn displacement(&self) -> &[MapFunction] {
        &self.q
    }

    pub fn solved_family(&self) -> Option<Family> {
        self.solved
    }

    /// Encloses `‖s‖∞ = max_i ‖s_i‖∞`.
    pub fn s_norm(&self) -> Bracket {
        self.s_norm
    }

    /// Encloses `M = max_i ‖q_i‖∞ / (1 - ‖s‖∞)`, a bound on `‖f*‖∞`.
    pub fn m_bound(&self) -> Bracket {
        self.m_bound
    }

    /// An interval known to contain every value of `f*`.
    pub fn range(&self) -> Bracket {
        self.range
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn join_up_residual(&self) -> f64 {
        self.join_up
    }

    pub fn well_definedness(&self) -> &WellDefinedness {
        &self.well_defined
    }

    /// `g_i(x, z) = s_i(x) z + q_i(x)`.
    #[inline]
    pub fn g(&self, i: usize, x: &[f64], z: f64) -> f64 {
        self.s[i].eval(x) * z + self.q[i].eval(x)
    }

    /// Values of `f*` on `V_k` by the exact recursion.
    pub fn evaluate_on_vk(&self, k: usize) -> Result<VertexTable, ConsistencyError> {
        let mut t = VertexTable::level0(self);
        for _ in 0..k {
            t = t.push(self)?;
        }
        Ok(t)
    }

    /// One application of the construction operator `T` to a function
    /// sampled on `V_k`, giving its image on `V_{k+1}`.
    pub fn apply_t(&self, f: &VertexTable) -> Result<VertexTable, ConsistencyError> {
        f.push_any(self)
    }

    /// Maximum join-up residual of an arbitrary displacement list against
    /// this model's data and scale functions.
    pub fn join_up_residual_of(&self, q: &[Expr]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, l) in self.domain.maps().iter().enumerate() {
            for (j, k) in self.domain.v0().iter().enumerate() {
                let p_img = self.data_at(&l.apply(k)).expect("images of V_0 are nodes");
                worst = worst.max((q[i].eval(k) - p_img + self.s[i].eval(k) * self.v0_values[j]).abs());
            }
        }
        worst
    }
}

/// Narrows `[-M, M]` by `R <- (∪_i s_i(K) R + q_i(K)) ∩ R` until stable.
fn range_enclosure(s: &[MapFunction], q: &[MapFunction], m: f64) -> Bracket {
    let mut r = Bracket::new(-m, m);
    for _ in 0..500 {
        let mut next: Option<Bracket> = None;
        for (si, qi) in s.iter().zip(q) {
            let img = si.range.mul(&r).add(&qi.range);
            next = Some(next.map_or(img, |b| b.hull(&img)));
        }
        let next = next.expect("at least one map");
        let lo = next.lo.max(r.lo);
        let hi = next.hi.min(r.hi);
        if !(lo <= hi) {
            break;
        }
        let done = (lo - r.lo).abs() <= 1e-15 * (1.0 + lo.abs()) && (hi - r.hi).abs() <= 1e-15 * (1.0 + hi.abs());
        r = Bracket::new(lo, hi);
        if done {
            break;
        }
    }
    r
}

/// Shared-face condition for the family `g_i`. Interval and gasket domains
/// always pass. Cubes need alternating signatures on every axis and either
/// equal constant `s_i` with multilinear `q_i`, or numerically matching
/// `g_i` on every shared face.
pub fn check_well_defined(domain: &Domain, s: &[MapFunction], q: &[MapFunction], m_bound: f64) -> WellDefinedness {
    let axes = match domain.shape() {
        crate::ifs::Shape::Cube { axes } => axes,
        crate::ifs::Shape::Interval(_) => {
            return WellDefinedness { route: "interval: cells meet in single points".into(), violations: vec![] }
        }
        crate::ifs::Shape::Gasket { .. } => {
            return WellDefinedness { route: "gasket: cells meet in single points".into(), violations: vec![] }
        }
    };
    let m = axes.len();
    let mut violations: Vec<String> = axes
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.alternating())
        .map(|(u, _)| format!("axis {}: signature not alternating", u + 1))
        .collect();
    if !violations.is_empty() {
        return WellDefinedness { route: "none".into(), violations };
    }
    let c0 = s[0].constant();
    let equal_constants = c0.is_some() && s.iter().all(|f| f.constant() == c0);
    if equal_constants && q.iter().all(|f| f.is_multilinear(m)) {
        return WellDefinedness { route: "equal constant scales with multilinear displacements".into(), violations };
    }

    // Numeric face matching.
    let radix: Vec<usize> = axes.iter().map(|a| a.pieces()).collect();
    let zs: Vec<f64> = (0..5).map(|j| -m_bound + 2.0 * m_bound * j as f64 / 4.0).collect();
    const PER_AXIS: usize = 5;
    for i in 0..domain.n_maps() {
        let letters = domain.axis_letters(i);
        for u in 0..m {
            if letters[u] + 1 >= radix[u] {
                continue;
            }
            let mut other = letters.clone();
            other[u] += 1;
            let j = other.iter().zip(&radix).fold(0, |acc, (w, r)| acc * r + w);
            let shared = axes[u].knots[letters[u] + 1];
            let t_i = axes[u].maps[letters[u]].invert(shared);
            let t_j = axes[u].maps[other[u]].invert(shared);
            let grid: Vec<Vec<f64>> = (0..m)
                .map(|v| {
                    if v == u {
                        vec![0.0]
                    } else {
                        (0..PER_AXIS)
                            .map(|t| axes[v].lo() + axes[v].length() * t as f64 / (PER_AXIS - 1) as f64)
                            .collect()
                    }
                })
                .collect();
            let mut idx = vec![0usize; m];
            let mut worst: f64 = 0.0;
            loop {
                let mut x: Vec<f64> = (0..m).map(|v| grid[v][idx[v]]).collect();
                let mut y = x.clone();
                x[u] = t_i;
                y[u] = t_j;
                for &z in &zs {
                    let a = s[i].eval(&x) * z + q[i].eval(&x);
                    let b = s[j].eval(&y) * z + q[j].eval(&y);
                    worst = worst.max((a - b).abs());
                }
                let mut v = 0;
                loop {
                    if v == m {
                        break;
                    }
                    idx[v] += 1;
                    if idx[v] < grid[v].len() {
                        break;
                    }
                    idx[v] = 0;
                    v += 1;
                }
                if v == m {
                    break;
                }
            }
            if worst > 1e-9 {
                violations.push(format!(
                    "maps {} and {} disagree by {worst:e} on their shared face along axis {}",
                    i + 1,
                    j + 1,
                    u + 1
                ));
            }
        }
    }
    WellDefinedness { route: "numeric face matching".into(), violations }
}

#[cfg(test)]
mod tests;
