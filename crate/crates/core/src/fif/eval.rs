//! Point evaluation by unwinding the self-referential equation.
//!
//! The address `ω` of `x` is read off digit by digit against cell
//! boundaries composed forward (`l_{ω_1} ∘ … ∘ l_{ω_j}`), which stay accurate
//! to rounding, instead of mapping `x` back through expanding inverses.
//! Descent stops at the unwinding depth or once `x` is within `1e-14 |K|`
//! of a corner of its cell, where `x` is resolved to that vertex. The
//! recursion `f*(l_i(y)) = s_i(y) f*(y) + q_i(y)` is then folded outwards
//! along the forward orbit of the deepest point.

use thiserror::Error;

use super::FifModel;
use crate::ifs::{AxisMap, SimilarityMap};
use crate::region::{barycentric, Point, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point {0:?} is not in the attractor")]
    OutsideK(Point),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
}

const MAX_DEPTH: usize = 400;
/// Points this close (relative to `|K|`) to a cell corner resolve to it.
const RESOLUTION: f64 = 1e-14;

impl FifModel {
    /// Interpolant of `p|_{V_0}`: affine, multilinear or barycentric.
    pub fn base_interpolant(&self, x: &[f64]) -> f64 {
        let v = self.v0_values();
        match self.domain().region() {
            Region::Triangle(t) => {
                let b = barycentric(t, [x[0], x[1]]);
                b[0] * v[0] + b[1] * v[1] + b[2] * v[2]
            }
            Region::Box { lo, hi } => {
                let m = lo.len();
                let t: Vec<f64> = (0..m).map(|u| (x[u] - lo[u]) / (hi[u] - lo[u])).collect();
                (0..v.len())
                    .map(|c| {
                        let w: f64 = (0..m).map(|u| if c & (1 << u) != 0 { t[u] } else { 1.0 - t[u] }).product();
                        w * v[c]
                    })
                    .sum()
            }
        }
    }

    /// Unwinding depth `k` with `2M ‖s‖^k ≤ tol`.
    pub fn eval_depth(&self, tol: f64) -> usize {
        let s = self.s_norm().hi;
        let two_m = 2.0 * self.m_bound().hi;
        if s == 0.0 || two_m <= tol {
            return 1;
        }
        ((two_m / tol).ln() / (1.0 / s).ln()).ceil().clamp(1.0, MAX_DEPTH as f64) as usize
    }

    /// `f*(x)` to within `tol`, for `x` resolved to `1e-14 |K|`. Vertices of
    /// `V_k` come out exactly while their cells stay above that resolution.
    pub fn evaluate_at(&self, x: &[f64], tol: f64) -> Result<f64, EvalError> {
        if !(tol > 0.0) {
            return Err(EvalError::Tolerance(tol));
        }
        let geom_tol = 1e-9 * self.geometry().diameter;
        if x.len() != self.domain().dim() || !self.domain().region().contains(x, geom_tol) {
            return Err(EvalError::OutsideK(x.to_vec()));
        }
        let depth = self.eval_depth(tol);
        let (letters, deepest, vertex) = match self.domain().region() {
            Region::Box { .. } => self.descend_box(x, depth),
            Region::Triangle(_) => self.descend_gasket(x, depth)?,
        };
        let maps = self.domain().maps();
        let mut y = deepest;
        let mut v = match vertex {
            Some(c) => self.v0_values()[c],
            None => self.base_interpolant(&y),
        };
        for &i in letters.iter().rev() {
            v = self.g(i, &y, v);
            y = maps[i].apply(&y);
        }
        Ok(v)
    }

    fn descend_box(&self, x: &[f64], depth: usize) -> (Vec<usize>, Point, Option<usize>) {
        let axes = self.domain().axes().expect("box domains have axes");
        let m = axes.len();
        let radix: Vec<usize> = axes.iter().map(|a| a.pieces()).collect();
        let snap = RESOLUTION * self.geometry().diameter;
        let mut frame: Vec<AxisMap> = vec![AxisMap::IDENTITY; m];
        let mut letters = Vec::new();
        // Corner of the current cell at x, as local coordinates.
        let corner_at = |frame: &[AxisMap]| -> Option<Point> {
            (0..m)
                .map(|u| {
                    let (lo, hi) = (axes[u].lo(), axes[u].hi());
                    if (frame[u].apply(lo) - x[u]).abs() <= snap {
                        Some(lo)
                    } else if (frame[u].apply(hi) - x[u]).abs() <= snap {
                        Some(hi)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let mut corner = corner_at(&frame);
        while letters.len() < depth && corner.is_none() {
            let mut map = 0;
            for u in 0..m {
                let (lo, hi) = (axes[u].lo(), axes[u].hi());
                let mut best = (f64::INFINITY, 0);
                for (w, l) in axes[u].maps.iter().enumerate() {
                    let c = frame[u].compose(l);
                    let (a, b) = (c.apply(lo), c.apply(hi));
                    let (a, b) = (a.min(b), a.max(b));
                    let gap = (a - x[u]).max(x[u] - b).max(0.0);
                    if gap < best.0 {
                        best = (gap, w);
                    }
                }
                let w = best.1;
                frame[u] = frame[u].compose(&axes[u].maps[w]);
                map = map * radix[u] + w;
            }
            letters.push(map);
            corner = corner_at(&frame);
        }
        let y: Point = corner
            .unwrap_or_else(|| (0..m).map(|u| frame[u].invert(x[u]).clamp(axes[u].lo(), axes[u].hi())).collect());
        let vertex = self.domain().v0().iter().position(|v| v.as_slice() == y.as_slice());
        (letters, y, vertex)
    }

    fn descend_gasket(&self, x: &[f64], depth: usize) -> Result<(Vec<usize>, Point, Option<usize>), EvalError> {
        let domain = self.domain();
        let Region::Triangle(v) = domain.region() else { unreachable!() };
        let diam = self.geometry().diameter;
        let xp = [x[0], x[1]];
        let mut frame = SimilarityMap::identity(2);
        let mut letters = Vec::new();
        let corners = |l: &SimilarityMap| -> [[f64; 2]; 3] {
            let t = |p: &[f64; 2]| {
                let q = l.apply(p);
                [q[0], q[1]]
            };
            [t(&v[0]), t(&v[1]), t(&v[2])]
        };
        let snap = RESOLUTION * diam;
        let corner_at = |frame: &SimilarityMap| -> Option<usize> {
            (0..3).find(|&c| {
                let p = frame.apply(&v[c]);
                crate::region::distance(&p, x) <= snap
            })
        };
        if let Some(c) = corner_at(&frame) {
            return Ok((letters, v[c].to_vec(), Some(c)));
        }
        while letters.len() < depth {
            let mut best = (f64::NEG_INFINITY, 0, SimilarityMap::identity(2));
            for (i, l) in domain.maps().iter().enumerate() {
                let c = frame.compose(l);
                let b = barycentric(&corners(&c), xp);
                let worst = b.iter().cloned().fold(f64::INFINITY, f64::min);
                if worst > best.0 {
                    best = (worst, i, c);
                }
            }
            // Barycentric deficit times the child's height is a distance.
            let height = best.2.ratio() * diam * 3f64.sqrt() / 2.0;
            if -best.0 * height > 1e-9 * diam {
                return Err(EvalError::OutsideK(x.to_vec()));
            }
            letters.push(best.1);
            frame = best.2;
            if let Some(c) = corner_at(&frame) {
                return Ok((letters, v[c].to_vec(), Some(c)));
            }
        }
        let b = barycentric(&corners(&frame), xp);
        let c: Vec<f64> = b.iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = c.iter().sum();
        let y = (0..2).map(|u| (0..3).map(|j| c[j] / sum * v[j][u]).sum()).collect();
        Ok((letters, y, None))
    }
}
