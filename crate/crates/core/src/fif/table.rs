//! Values of a function on `V_k`.
//!
//! Interval and cube domains use a tensor grid: `V_k` is the product of the
//! per-axis level-`k` knot sets, stored row-major with axis 1 slowest. The
//! gasket stores three vertex values per level-`k` cell in address order,
//! so shared vertices appear once per incident cell.

use rayon::prelude::*;
use thiserror::Error;

use super::FifModel;
use crate::ifs::{Domain, PointSet, SimilarityMap};
use crate::region::Point;

/// Two images of one point disagree by more than `CONSISTENCY_TOL` relative.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("level {level}: values {a} and {b} disagree at {point:?}")]
pub struct ConsistencyError {
    pub level: usize,
    pub point: Point,
    pub a: f64,
    pub b: f64,
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSISTENCY_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub level: usize,
    /// Pieces per axis, `n_u`.
    pub radix: Vec<usize>,
    /// Level-`k` knots per axis, `n_u^k + 1` each.
    pub coords: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshTable {
    pub level: usize,
    /// Values at the images of the three corners, per cell in address order.
    pub values: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VertexTable {
    Grid(GridTable),
    Mesh(MeshTable),
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for u in (0..dims.len().saturating_sub(1)).rev() {
        s[u] = s[u + 1] * dims[u + 1];
    }
    s
}

/// Per-axis data needed to push grid data one level.
pub(crate) struct GridMaps {
    pub radix: Vec<usize>,
    /// `flip[u][w]`: map `w` of axis `u` reverses orientation.
    pub flip: Vec<Vec<bool>>,
    pub axis_maps: Vec<Vec<crate::ifs::AxisMap>>,
}

impl GridMaps {
    pub fn new(domain: &Domain) -> GridMaps {
        let axes = domain.axes().expect("grid layout needs an axis domain");
        GridMaps {
            radix: axes.iter().map(|a| a.pieces()).collect(),
            flip: axes.iter().map(|a| a.maps.iter().map(|l| l.scale < 0.0).collect()).collect(),
            axis_maps: axes.iter().map(|a| a.maps.clone()).collect(),
        }
    }

    /// Map index from per-axis letters (axis 1 most significant).
    pub fn map_index(&self, letters: &[usize]) -> usize {
        letters.iter().zip(&self.radix).fold(0, |acc, (w, r)| acc * r + w)
    }

    /// Sources `(letter, old position)` of a new point position along one
    /// axis; `block = n^{k-1}` old cells. Boundary points have two.
    pub fn point_sources(&self, u: usize, p: usize, block: usize, out: &mut Vec<(usize, usize)>) {
        out.clear();
        let n = self.radix[u];
        let w = (p / block).min(n - 1);
        let r = p - w * block;
        out.push((w, if self.flip[u][w] { block - r } else { r }));
        if r == 0 && w > 0 {
            let w2 = w - 1;
            out.push((w2, if self.flip[u][w2] { 0 } else { block }));
        }
    }

    /// Source `(letter, old position)` of a new cell position along one axis.
    #[inline]
    pub fn cell_source(&self, u: usize, p: usize, block: usize) -> (usize, usize) {
        let w = p / block;
        let r = p - w * block;
        (w, if self.flip[u][w] { block - 1 - r } else { r })
    }

    /// Level-`k` knots of every axis.
    pub fn coords(&self, domain: &Domain, k: usize) -> Vec<Vec<f64>> {
        let axes = domain.axes().expect("axis domain");
        let mut coords: Vec<Vec<f64>> = axes.iter().map(|a| vec![a.lo(), a.hi()]).collect();
        for level in 1..=k {
            for u in 0..coords.len() {
                let block = self.radix[u].pow(level as u32 - 1);
                let len = self.radix[u] * block + 1;
                let mut src = Vec::with_capacity(2);
                coords[u] = (0..len)
                    .map(|p| {
                        self.point_sources(u, p, block, &mut src);
                        let (w, o) = src[0];
                        self.axis_maps[u][w].apply(coords[u][o])
                    })
                    .collect();
            }
        }
        coords
    }
}

/// Offset `b` of `l_ω(x) = σ^k x + b` for a gasket cell given by its index.
pub(crate) fn mesh_offset(maps: &[SimilarityMap], index: usize, k: usize) -> [f64; 2] {
    let n = maps.len();
    let mut l = SimilarityMap::identity(2);
    let mut digits = vec![0; k];
    let mut idx = index;
    for d in digits.iter_mut().rev() {
        *d = idx % n;
        idx /= n;
    }
    for &d in &digits {
        l = l.compose(&maps[d]);
    }
    [l.axes[0].offset, l.axes[1].offset]
}

/// Level-1 identification pattern: groups of `(child, corner)` pairs that
/// name the same point, plus the parent corner at that point if any.
#[derive(Debug, Clone)]
pub(crate) struct MeshPattern {
    pub groups: Vec<(Vec<(usize, usize)>, Option<usize>)>,
}

impl MeshPattern {
    pub fn new(domain: &Domain) -> MeshPattern {
        let diam = domain.geometry().diameter;
        let mut set = PointSet::new(2, diam);
        let mut members: Vec<Vec<(usize, usize)>> = Vec::new();
        for (a, l) in domain.maps().iter().enumerate() {
            for (j, v) in domain.v0().iter().enumerate() {
                let (g, new) = set.insert(l.apply(v));
                if new {
                    members.push(Vec::new());
                }
                members[g].push((a, j));
            }
        }
        let groups = members
            .into_iter()
            .enumerate()
            .filter_map(|(g, mem)| {
                let p = &set.points()[g];
                let corner = domain.v0().iter().position(|v| crate::region::distance(v, p) <= 1e-10 * diam);
                (mem.len() > 1 || corner.is_some()).then_some((mem, corner))
            })
            .collect();
        MeshPattern { groups }
    }
}

impl VertexTable {
    /// `p` on `V_0`.
    pub fn level0(model: &FifModel) -> VertexTable {
        let domain = model.domain();
        if domain.is_gasket() {
            let v = model.v0_values();
            return VertexTable::Mesh(MeshTable { level: 0, values: vec![[v[0], v[1], v[2]]] });
        }
        let gm = GridMaps::new(domain);
        let m = gm.radix.len();
        let coords = gm.coords(domain, 0);
        let st = strides(&vec![2; m]);
        let mut values = vec![0.0; 1 << m];
        for (c, &v) in model.v0_values().iter().enumerate() {
            let lin: usize = (0..m).filter(|u| c & (1 << u) != 0).map(|u| st[u]).sum();
            values[lin] = v;
        }
        VertexTable::Grid(GridTable { level: 0, radix: gm.radix, coords, values })
    }

    /// Samples `f` on `V_k`.
    pub fn from_fn(domain: &Domain, k: usize, mut f: impl FnMut(&[f64]) -> f64) -> VertexTable {
        if domain.is_gasket() {
            let maps = domain.maps();
            let sigma = maps[0].axes[0].scale.powi(k as i32);
            let cells = maps.len().pow(k as u32);
            let values = (0..cells)
                .map(|c| {
                    let b = mesh_offset(maps, c, k);
                    let mut out = [0.0; 3];
                    for (j, v) in domain.v0().iter().enumerate() {
                        out[j] = f(&[sigma * v[0] + b[0], sigma * v[1] + b[1]]);
                    }
                    out
                })
                .collect();
            return VertexTable::Mesh(MeshTable { level: k, values });
        }
        let gm = GridMaps::new(domain);
        let coords = gm.coords(domain, k);
        let dims: Vec<usize> = coords.iter().map(Vec::len).collect();
        let st = strides(&dims);
        let total: usize = dims.iter().product();
        let mut x = vec![0.0; dims.len()];
        let values = (0..total)
            .map(|lin| {
                for u in 0..dims.len() {
                    x[u] = coords[u][(lin / st[u]) % dims[u]];
                }
                f(&x)
            })
            .collect();
        VertexTable::Grid(GridTable { level: k, radix: gm.radix, coords, values })
    }

    pub fn level(&self) -> usize {
        match self {
            VertexTable::Grid(g) => g.level,
            VertexTable::Mesh(m) => m.level,
        }
    }

    /// `(point, value)` with each point of `V_k` once.
    pub fn points_values(&self, domain: &Domain) -> Vec<(Point, f64)> {
        match self {
            VertexTable::Grid(g) => {
                let dims: Vec<usize> = g.coords.iter().map(Vec::len).collect();
                let st = strides(&dims);
                g.values
                    .iter()
                    .enumerate()
                    .map(|(lin, &v)| {
                        ((0..dims.len()).map(|u| g.coords[u][(lin / st[u]) % dims[u]]).collect(), v)
                    })
                    .collect()
            }
            VertexTable::Mesh(t) => {
                let maps = domain.maps();
                let sigma = maps[0].axes[0].scale.powi(t.level as i32);
                let mut set = PointSet::new(2, domain.geometry().diameter);
                let mut out = Vec::new();
                for (c, vals) in t.values.iter().enumerate() {
                    let b = mesh_offset(maps, c, t.level);
                    for (j, v) in domain.v0().iter().enumerate() {
                        let p = vec![sigma * v[0] + b[0], sigma * v[1] + b[1]];
                        if set.insert(p.clone()).1 {
                            out.push((p, vals[j]));
                        }
                    }
                }
                out
            }
        }
    }

    /// Largest `|a - b|` over matching entries of two tables of one level.
    pub fn max_abs_diff(&self, other: &VertexTable) -> f64 {
        match (self, other) {
            (VertexTable::Grid(a), VertexTable::Grid(b)) => {
                a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            }
            (VertexTable::Mesh(a), VertexTable::Mesh(b)) => a
                .values
                .iter()
                .zip(&b.values)
                .flat_map(|(x, y)| (0..3).map(move |j| (x[j] - y[j]).abs()))
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }

    /// Image under `T`: `(Tf)(l_i(y)) = s_i(y) f(y) + q_i(y)` on `V_{k+1}`,
    /// for `self` a table of `f*`. Besides shared points, mesh pushes check
    /// that the new values on `V_k` reproduce the old ones.
    pub fn push(&self, model: &FifModel) -> Result<VertexTable, ConsistencyError> {
        self.push_with(model, true)
    }

    /// As [`VertexTable::push`] for an arbitrary `f`; only points shared
    /// between cells are checked.
    pub fn push_any(&self, model: &FifModel) -> Result<VertexTable, ConsistencyError> {
        self.push_with(model, false)
    }

    fn push_with(&self, model: &FifModel, fixed_point: bool) -> Result<VertexTable, ConsistencyError> {
        match self {
            VertexTable::Grid(g) => push_grid(g, model).map(VertexTable::Grid),
            VertexTable::Mesh(t) => push_mesh(t, model, fixed_point).map(VertexTable::Mesh),
        }
    }
}

fn push_grid(old: &GridTable, model: &FifModel) -> Result<GridTable, ConsistencyError> {
    let domain = model.domain();
    let gm = GridMaps::new(domain);
    let m = gm.radix.len();
    let k = old.level + 1;
    let blocks: Vec<usize> = gm.radix.iter().map(|n| n.pow(old.level as u32)).collect();
    let old_dims: Vec<usize> = old.coords.iter().map(Vec::len).collect();
    let new_dims: Vec<usize> = blocks.iter().zip(&gm.radix).map(|(b, n)| b * n + 1).collect();
    let old_st = strides(&old_dims);
    let new_st = strides(&new_dims);
    let coords = gm.coords(domain, k);
    let total: usize = new_dims.iter().product();
    let s = model.scale();
    let q = model.displacement();

    let mut values = vec![0.0; total];
    const CHUNK: usize = 4096;
    let bad: Option<ConsistencyError> = values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut src: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(2); m];
            let mut y = vec![0.0; m];
            let mut pick = vec![0usize; m];
            let mut letters = vec![0usize; m];
            for (off, slot) in chunk.iter_mut().enumerate() {
                let lin = ci * CHUNK + off;
                for u in 0..m {
                    let p = (lin / new_st[u]) % new_dims[u];
                    gm.point_sources(u, p, blocks[u], &mut src[u]);
                }
                pick.iter_mut().for_each(|x| *x = 0);
                let mut first: Option<f64> = None;
                loop {
                    let mut olin = 0;
                    for u in 0..m {
                        let (w, o) = src[u][pick[u]];
                        letters[u] = w;
                        y[u] = old.coords[u][o];
                        olin += o * old_st[u];
                    }
                    let i = gm.map_index(&letters);
                    let v = s[i].eval(&y) * old.values[olin] + q[i].eval(&y);
                    match first {
                        None => first = Some(v),
                        Some(a) if !agree(a, v) => {
                            let point = (0..m).map(|u| coords[u][(lin / new_st[u]) % new_dims[u]]).collect();
                            return Some(ConsistencyError { level: k, point, a, b: v });
                        }
                        Some(_) => {}
                    }
                    let mut u = 0;
                    while u < m {
                        pick[u] += 1;
                        if pick[u] < src[u].len() {
                            break;
                        }
                        pick[u] = 0;
                        u += 1;
                    }
                    if u == m {
                        break;
                    }
                }
                *slot = first.expect("every point has a source");
            }
            None
        })
        .find_any(Option::is_some)
        .flatten();
    if let Some(e) = bad {
        return Err(e);
    }
    Ok(GridTable { level: k, radix: gm.radix, coords, values })
}

fn push_mesh(old: &MeshTable, model: &FifModel, fixed_point: bool) -> Result<MeshTable, ConsistencyError> {
    let domain = model.domain();
    let maps = domain.maps();
    let n = maps.len();
    let c_old = old.values.len();
    let sigma = maps[0].axes[0].scale.powi(old.level as i32);
    let v0 = domain.v0();
    let s = model.scale();
    let q = model.displacement();
    let offsets: Vec<[f64; 2]> = (0..c_old).into_par_iter().map(|c| mesh_offset(maps, c, old.level)).collect();
    let mut values = vec![[0.0; 3]; n * c_old];
    values.par_chunks_mut(c_old).enumerate().for_each(|(i, chunk)| {
        let mut y = [0.0; 2];
        for (c, slot) in chunk.iter_mut().enumerate() {
            for j in 0..3 {
                y[0] = sigma * v0[j][0] + offsets[c][0];
                y[1] = sigma * v0[j][1] + offsets[c][1];
                slot[j] = s[i].eval(&y) * old.values[c][j] + q[i].eval(&y);
            }
        }
    });
    let k = old.level + 1;
    let pattern = MeshPattern::new(domain);
    let bad = (0..values.len() / n).into_par_iter().find_map_any(|p| {
        for (members, corner) in &pattern.groups {
            let (a0, j0) = members[0];
            let first = values[p * n + a0][j0];
            let parent = corner.filter(|_| fixed_point).map(|c| old_parent_value(old, p, c));
            for &(a, j) in members.iter().skip(1) {
                let v = values[p * n + a][j];
                if !agree(first, v) {
                    return Some((p, a, j, first, v));
                }
            }
            if let Some(pv) = parent {
                if !agree(first, pv) {
                    return Some((p, a0, j0, pv, first));
                }
            }
        }
        None
    });
    if let Some((p, a, j, x, y)) = bad {
        let sig_k = maps[0].axes[0].scale.powi(k as i32);
        let b = mesh_offset(maps, p * n + a, k);
        let point = vec![sig_k * v0[j][0] + b[0], sig_k * v0[j][1] + b[1]];
        return Err(ConsistencyError { level: k, point, a: x, b: y });
    }
    Ok(MeshTable { level: k, values })
}

/// Value of the level-(k-1) cell `p` at its corner `c`, where `p` is the
/// parent index in the new table. The old table is indexed the same way.
fn old_parent_value(old: &MeshTable, p: usize, c: usize) -> f64 {
    old.values[p][c]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_row_major() {
        assert_eq!(strides(&[3, 4, 5]), vec![20, 5, 1]);
        assert_eq!(strides(&[7]), vec![1]);
    }

    #[test]
    fn level_two_coords_follow_maps() {
        let d = Domain::interval(vec![0.0, 0.25, 1.0], vec![true, false]).unwrap();
        let gm = GridMaps::new(&d);
        let c = gm.coords(&d, 2);
        assert_eq!(c[0].len(), 5);
        let mut want: Vec<f64> = d.vertex_set(2).unwrap().into_iter().map(|p| p[0]).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in c[0].iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(c[0].windows(2).all(|w| w[0] < w[1]));
    }
}
