//! Similarity maps of the supported attractors, cell enumeration and vertex
//! sets.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::region::{distance, Point, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("knots must be strictly increasing (axis {axis}, index {index})")]
    NonMonotoneKnots { axis: usize, index: usize },
    #[error("axis {axis}: {knots} knots need {expected} signature bits, got {got}")]
    SignatureLength { axis: usize, knots: usize, expected: usize, got: usize },
    #[error("an axis needs at least two knots")]
    TooFewKnots,
    #[error("a cube needs at least two axes, got {0}")]
    CubeAxes(usize),
    #[error("gasket vertices are not equilateral (sides {0:?})")]
    NotEquilateral([f64; 3]),
    #[error("gasket level must be at least 1")]
    GasketLevel,
    #[error("{n}^{k} cells overflow the address space")]
    CellOverflow { n: usize, k: usize },
    #[error("non-finite coordinate")]
    NonFinite,
}

/// `t -> scale * t + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisMap {
    pub scale: f64,
    pub offset: f64,
}

impl AxisMap {
    pub const IDENTITY: AxisMap = AxisMap { scale: 1.0, offset: 0.0 };

    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        self.scale * t + self.offset
    }

    #[inline]
    pub fn invert(&self, t: f64) -> f64 {
        (t - self.offset) / self.scale
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AxisMap) -> AxisMap {
        AxisMap { scale: self.scale * inner.scale, offset: self.scale * inner.offset + self.offset }
    }
}

/// Diagonal affine map of R^m. Gasket maps are homotheties, so every axis
/// carries the same scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMap {
    pub axes: Vec<AxisMap>,
}

impl SimilarityMap {
    pub fn identity(m: usize) -> Self {
        SimilarityMap { axes: vec![AxisMap::IDENTITY; m] }
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        self.axes.iter().zip(x).map(|(a, &t)| a.apply(t)).collect()
    }

    pub fn invert(&self, x: &[f64]) -> Point {
        self.axes.iter().zip(x).map(|(a, &t)| a.invert(t)).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SimilarityMap) -> SimilarityMap {
        SimilarityMap { axes: self.axes.iter().zip(&inner.axes).map(|(a, b)| a.compose(b)).collect() }
    }

    /// Euclidean contraction ratio: the largest per-axis `|scale|`.
    pub fn ratio(&self) -> f64 {
        self.axes.iter().map(|a| a.scale.abs()).fold(0.0, f64::max)
    }

    pub fn min_scale(&self) -> f64 {
        self.axes.iter().map(|a| a.scale.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// One coordinate axis of an interval or cube domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub knots: Vec<f64>,
    pub signature: Vec<bool>,
    pub maps: Vec<AxisMap>,
}

impl Axis {
    pub fn new(knots: Vec<f64>, signature: Vec<bool>) -> Result<Axis, DomainError> {
        Self::on_axis(0, knots, signature)
    }

    fn on_axis(axis: usize, knots: Vec<f64>, signature: Vec<bool>) -> Result<Axis, DomainError> {
        let maps = build_axis_maps(axis, &knots, &signature)?;
        Ok(Axis { knots, signature, maps })
    }

    pub fn pieces(&self) -> usize {
        self.maps.len()
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.hi() - self.lo()
    }

    pub fn equally_spaced(&self) -> bool {
        let n = self.pieces() as f64;
        let step = self.length() / n;
        self.knots
            .iter()
            .enumerate()
            .all(|(j, &x)| (x - (self.lo() + j as f64 * step)).abs() <= 1e-12 * self.length())
    }

    /// True when signature bits alternate, as in `(0,1,0,1,…)` or `(1,0,1,0,…)`.
    pub fn alternating(&self) -> bool {
        self.signature.windows(2).all(|w| w[0] != w[1])
    }
}

/// Maps `l_i` of one axis: `l_i` sends `[x_0, x_n]` onto `[x_{i-1}, x_i]`,
/// reversed when the signature bit is set.
pub fn build_interval_maps(knots: &[f64], signature: &[bool]) -> Result<Vec<AxisMap>, DomainError> {
    build_axis_maps(0, knots, signature)
}

fn build_axis_maps(axis: usize, knots: &[f64], signature: &[bool]) -> Result<Vec<AxisMap>, DomainError> {
    if knots.len() < 2 {
        return Err(DomainError::TooFewKnots);
    }
    if knots.iter().any(|x| !x.is_finite()) {
        return Err(DomainError::NonFinite);
    }
    if let Some(index) = knots.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(DomainError::NonMonotoneKnots { axis, index: index + 1 });
    }
    let n = knots.len() - 1;
    if signature.len() != n {
        return Err(DomainError::SignatureLength {
            axis,
            knots: knots.len(),
            expected: n,
            got: signature.len(),
        });
    }
    let (x0, xn) = (knots[0], knots[n]);
    let width = xn - x0;
    Ok((0..n)
        .map(|i| {
            let (start, end) =
                if signature[i] { (knots[i + 1], knots[i]) } else { (knots[i], knots[i + 1]) };
            AxisMap { scale: (end - start) / width, offset: (start * xn - end * x0) / width }
        })
        .collect())
}

/// Attractor variants with their defining data.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Interval(Axis),
    Cube { axes: Vec<Axis> },
    Gasket { vertices: [[f64; 2]; 3], level: usize },
}

/// Address `ω = (ω_1, …, ω_k)` with 0-based letters; `l_ω = l_{ω_1} ∘ … ∘ l_{ω_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellAddress(pub Vec<usize>);

impl CellAddress {
    pub fn level(&self) -> usize {
        self.0.len()
    }

    /// Position in address order (first letter most significant).
    pub fn index(&self, n: usize) -> usize {
        self.0.iter().fold(0, |acc, &w| acc * n + w)
    }

    pub fn from_index(mut index: usize, n: usize, k: usize) -> CellAddress {
        let mut w = vec![0; k];
        for slot in w.iter_mut().rev() {
            *slot = index % n;
            index /= n;
        }
        CellAddress(w)
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.0.iter().map(|w| (w + 1).to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Geometric constants of a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainGeometry {
    /// `1 / max_i r_i`.
    pub lambda: f64,
    /// `1 / min` per-axis scale over all maps and axes.
    pub lambda0: f64,
    pub n_maps: usize,
    pub diameter: f64,
    pub min_side: f64,
    /// Box dimension of the attractor `K` itself.
    pub dim_k: f64,
}

/// An attractor together with its map family.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    shape: Shape,
    maps: Vec<SimilarityMap>,
    v0: Vec<Point>,
    region: Region,
}

impl Domain {
    pub fn interval(knots: Vec<f64>, signature: Vec<bool>) -> Result<Domain, DomainError> {
        let axis = Axis::new(knots, signature)?;
        let maps = axis.maps.iter().map(|a| SimilarityMap { axes: vec![*a] }).collect();
        let v0 = vec![vec![axis.lo()], vec![axis.hi()]];
        let region = Region::Box { lo: vec![axis.lo()], hi: vec![axis.hi()] };
        Ok(Domain { shape: Shape::Interval(axis), maps, v0, region })
    }

    pub fn cube(axes: Vec<(Vec<f64>, Vec<bool>)>) -> Result<Domain, DomainError> {
        if axes.len() < 2 {
            return Err(DomainError::CubeAxes(axes.len()));
        }
        let axes: Vec<Axis> = axes
            .into_iter()
            .enumerate()
            .map(|(u, (k, s))| Axis::on_axis(u, k, s))
            .collect::<Result<_, _>>()?;
        let m = axes.len();
        let radix: Vec<usize> = axes.iter().map(Axis::pieces).collect();
        let n: usize = radix.iter().product();
        let maps = (0..n)
            .map(|i| {
                let letters = mixed_radix(i, &radix);
                SimilarityMap { axes: (0..m).map(|u| axes[u].maps[letters[u]]).collect() }
            })
            .collect();
        let lo: Vec<f64> = axes.iter().map(Axis::lo).collect();
        let hi: Vec<f64> = axes.iter().map(Axis::hi).collect();
        let v0 = (0..1usize << m)
            .map(|c| (0..m).map(|u| if c & (1 << u) != 0 { hi[u] } else { lo[u] }).collect())
            .collect();
        Ok(Domain { shape: Shape::Cube { axes }, maps, v0, region: Region::Box { lo, hi } })
    }

    pub fn gasket(vertices: [[f64; 2]; 3], level: usize) -> Result<Domain, DomainError> {
        if level == 0 {
            return Err(DomainError::GasketLevel);
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(DomainError::NonFinite);
        }
        let sides = [
            distance(&vertices[0], &vertices[1]),
            distance(&vertices[1], &vertices[2]),
            distance(&vertices[2], &vertices[0]),
        ];
        let longest = sides.iter().cloned().fold(0.0, f64::max);
        let shortest = sides.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(shortest > 0.0) || longest - shortest > 1e-9 * longest {
            return Err(DomainError::NotEquilateral(sides));
        }
        let base: Vec<SimilarityMap> = vertices
            .iter()
            .map(|k| SimilarityMap {
                axes: (0..2).map(|u| AxisMap { scale: 0.5, offset: 0.5 * k[u] }).collect(),
            })
            .collect();
        let mut maps = vec![SimilarityMap::identity(2)];
        for _ in 0..level {
            maps = maps.iter().flat_map(|w| base.iter().map(move |b| w.compose(b))).collect();
        }
        let v0 = vertices.iter().map(|v| v.to_vec()).collect();
        Ok(Domain {
            shape: Shape::Gasket { vertices, level },
            maps,
            v0,
            region: Region::Triangle(vertices),
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_gasket(&self) -> bool {
        matches!(self.shape, Shape::Gasket { .. })
    }

    /// Per-axis data for interval and cube domains.
    pub fn axes(&self) -> Option<&[Axis]> {
        match &self.shape {
            Shape::Interval(a) => Some(std::slice::from_ref(a)),
            Shape::Cube { axes } => Some(axes),
            Shape::Gasket { .. } => None,
        }
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn n_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[SimilarityMap] {
        &self.maps
    }

    pub fn v0(&self) -> &[Point] {
        &self.v0
    }

    /// The convex hull of `K`: the box itself, or the gasket's triangle.
    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Per-axis letters of a cube map index (axis 1 most significant).
    pub fn axis_letters(&self, i: usize) -> Vec<usize> {
        match self.axes() {
            Some(axes) => mixed_radix(i, &axes.iter().map(Axis::pieces).collect::<Vec<_>>()),
            None => vec![i],
        }
    }

    pub fn cell_map(&self, w: &CellAddress) -> SimilarityMap {
        w.0.iter()
            .fold(SimilarityMap::identity(self.dim()), |acc, &i| acc.compose(&self.maps[i]))
    }

    pub fn cell_region(&self, w: &CellAddress) -> Region {
        self.map_region(&self.cell_map(w))
    }

    pub fn map_region(&self, l: &SimilarityMap) -> Region {
        match &self.region {
            Region::Box { lo, hi } => {
                let a = l.apply(lo);
                let b = l.apply(hi);
                Region::Box {
                    lo: a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
                    hi: a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
                }
            }
            Region::Triangle(v) => {
                let t = |p: &[f64; 2]| {
                    let q = l.apply(p);
                    [q[0], q[1]]
                };
                Region::Triangle([t(&v[0]), t(&v[1]), t(&v[2])])
            }
        }
    }

    /// `N^k`, or an error when it does not fit in memory-addressable space.
    pub fn cell_count(&self, k: usize) -> Result<usize, DomainError> {
        let n = self.n_maps();
        u32::try_from(k)
            .ok()
            .and_then(|k32| n.checked_pow(k32))
            .filter(|&c| c <= 1usize << 48)
            .ok_or(DomainError::CellOverflow { n, k })
    }

    /// Lazily enumerates the level-`k` cells in address order.
    pub fn cells(&self, k: usize) -> Result<Cells<'_>, DomainError> {
        let total = self.cell_count(k)?;
        Ok(Cells { domain: self, k, next: 0, total })
    }

    /// `V_k = ∪_{|ω| = k} l_ω(V_0)`, deduplicated. Grid domains return the
    /// points in row-major order (axis 1 slowest); the gasket in order of
    /// first appearance.
    pub fn vertex_set(&self, k: usize) -> Result<Vec<Point>, DomainError> {
        let mut set = PointSet::new(self.dim(), self.geometry().diameter);
        for (w, _) in self.cells(k)? {
            let l = self.cell_map(&w);
            for v in &self.v0 {
                set.insert(l.apply(v));
            }
        }
        let mut pts = set.into_points();
        if !self.is_gasket() {
            pts.sort_by(|a, b| {
                a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            });
        }
        Ok(pts)
    }

    /// Interpolation nodes `V = V_1`.
    pub fn nodes(&self) -> Vec<Point> {
        self.vertex_set(1).expect("level 1 always fits")
    }

    pub fn geometry(&self) -> DomainGeometry {
        let max_ratio = self.maps.iter().map(SimilarityMap::ratio).fold(0.0, f64::max);
        let min_scale = self.maps.iter().map(SimilarityMap::min_scale).fold(f64::INFINITY, f64::min);
        let (diameter, min_side, dim_k) = match &self.shape {
            Shape::Interval(a) => (a.length(), a.length(), 1.0),
            Shape::Cube { axes } => (
                axes.iter().map(|a| a.length().powi(2)).sum::<f64>().sqrt(),
                axes.iter().map(Axis::length).fold(f64::INFINITY, f64::min),
                axes.len() as f64,
            ),
            Shape::Gasket { .. } => {
                let d = self.region.diameter();
                (d, d, 3f64.ln() / 2f64.ln())
            }
        };
        DomainGeometry {
            lambda: 1.0 / max_ratio,
            lambda0: 1.0 / min_scale,
            n_maps: self.maps.len(),
            diameter,
            min_side,
            dim_k,
        }
    }

    /// All per-axis scales of all maps agree.
    pub fn is_equal_ratio(&self) -> bool {
        let first = self.maps[0].axes[0].scale.abs();
        self.maps
            .iter()
            .flat_map(|l| l.axes.iter())
            .all(|a| (a.scale.abs() - first).abs() <= 1e-12 * first)
    }

    /// Index of a map whose cell contains `x` (within `tol`), preferring the
    /// lowest index.
    pub fn locate(&self, x: &[f64], tol: f64) -> Option<usize> {
        (0..self.maps.len()).find(|&i| self.map_region(&self.maps[i]).contains(x, tol))
    }
}

pub(crate) fn mixed_radix(mut i: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for u in (0..radix.len()).rev() {
        out[u] = i % radix[u];
        i /= radix[u];
    }
    out
}

/// Iterator over `(address, cell region)` pairs of one level.
pub struct Cells<'a> {
    domain: &'a Domain,
    k: usize,
    next: usize,
    total: usize,
}

impl Iterator for Cells<'_> {
    type Item = (CellAddress, Region);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.total {
            return None;
        }
        let w = CellAddress::from_index(self.next, self.domain.n_maps(), self.k);
        self.next += 1;
        let r = self.domain.cell_region(&w);
        Some((w, r))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total - self.next;
        (left, Some(left))
    }
}

/// Point deduplication on a quantized grid of resolution `1e-10 * |K|`.
#[derive(Debug, Clone)]
pub struct PointSet {
    res: f64,
    keys: HashMap<Vec<i64>, usize>,
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(_dim: usize, diameter: f64) -> Self {
        PointSet { res: 1e-10 * diameter.max(f64::MIN_POSITIVE), keys: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|t| (t / self.res).round() as i64).collect()
    }

    pub fn find(&self, p: &[f64]) -> Option<usize> {
        let base = self.key(p);
        let m = base.len();
        let mut offs = vec![-1i64; m];
        loop {
            let k: Vec<i64> = base.iter().zip(&offs).map(|(b, o)| b + o).collect();
            if let Some(&i) = self.keys.get(&k) {
                if distance(&self.points[i], p) <= 2.0 * self.res {
                    return Some(i);
                }
            }
            let mut u = 0;
            loop {
                if u == m {
                    return None;
                }
                offs[u] += 1;
                if offs[u] <= 1 {
                    break;
                }
                offs[u] = -1;
                u += 1;
            }
        }
    }

    /// Inserts `p` unless a matching point exists; returns its index and
    /// whether it was new.
    pub fn insert(&mut self, p: Point) -> (usize, bool) {
        if let Some(i) = self.find(&p) {
            return (i, false);
        }
        let i = self.points.len();
        self.keys.insert(self.key(&p), i);
        self.points.push(p);
        (i, true)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}
