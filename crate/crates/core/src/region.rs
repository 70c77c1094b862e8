//! Points, regions and numeric brackets shared by every module.

use serde::{Deserialize, Serialize};

pub type Point = Vec<f64>;

/// Closed interval `[lo, hi]` enclosing a quantity known only numerically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "bracket [{lo}, {hi}] is inverted");
        Bracket { lo, hi }
    }

    pub fn exact(v: f64) -> Self {
        Bracket { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn hull(&self, other: &Bracket) -> Bracket {
        Bracket { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn add(&self, other: &Bracket) -> Bracket {
        Bracket { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    pub fn mul(&self, other: &Bracket) -> Bracket {
        let c = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        Bracket {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn abs_max(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// A compact subset of the plane or of R^m on which expressions are sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Axis-parallel box `lo[u] <= x_u <= hi[u]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Closed planar triangle.
    Triangle([[f64; 2]; 3]),
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Triangle(_) => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt(),
            Region::Triangle(v) => {
                let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                d(v[0], v[1]).max(d(v[1], v[2])).max(d(v[0], v[2]))
            }
        }
    }

    /// Sample grid with `2^depth` subdivisions per axis (per side for triangles),
    /// together with the largest distance `h` from any region point to the grid.
    pub fn grid(&self, depth: u32) -> (Vec<Point>, f64) {
        let div = 1usize << depth;
        self.grid_with(div)
    }

    /// Sample grid with `div` subdivisions per axis, and the covering radius bound.
    pub fn grid_with(&self, div: usize) -> (Vec<Point>, f64) {
        let div = div.max(1);
        match self {
            Region::Box { lo, hi } => {
                let m = lo.len();
                let mut pts = Vec::with_capacity((div + 1).pow(m as u32));
                let mut idx = vec![0usize; m];
                loop {
                    pts.push(
                        (0..m)
                            .map(|u| lerp(lo[u], hi[u], idx[u] as f64 / div as f64))
                            .collect(),
                    );
                    let mut u = m;
                    loop {
                        if u == 0 {
                            let h = (0..m)
                                .map(|u| ((hi[u] - lo[u]) / div as f64).powi(2))
                                .sum::<f64>()
                                .sqrt();
                            return (pts, h);
                        }
                        u -= 1;
                        idx[u] += 1;
                        if idx[u] <= div {
                            break;
                        }
                        idx[u] = 0;
                    }
                }
            }
            Region::Triangle(v) => {
                let mut pts = Vec::with_capacity((div + 1) * (div + 2) / 2);
                for a in 0..=div {
                    for b in 0..=(div - a) {
                        let c = div - a - b;
                        let (wa, wb, wc) =
                            (a as f64 / div as f64, b as f64 / div as f64, c as f64 / div as f64);
                        pts.push(vec![
                            wa * v[0][0] + wb * v[1][0] + wc * v[2][0],
                            wa * v[0][1] + wb * v[1][1] + wc * v[2][1],
                        ]);
                    }
                }
                (pts, self.diameter() / div as f64)
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&t, (&a, &b))| t >= a - tol && t <= b + tol),
            Region::Triangle(v) => {
                let w = barycentric(v, [x[0], x[1]]);
                w.iter().all(|&c| c >= -tol)
            }
        }
    }
}

pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 1.0 {
        b
    } else {
        a + (b - a) * t
    }
}

pub(crate) fn barycentric(v: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let det = (v[1][1] - v[2][1]) * (v[0][0] - v[2][0]) + (v[2][0] - v[1][0]) * (v[0][1] - v[2][1]);
    let w0 = ((v[1][1] - v[2][1]) * (p[0] - v[2][0]) + (v[2][0] - v[1][0]) * (p[1] - v[2][1])) / det;
    let w1 = ((v[2][1] - v[0][1]) * (p[0] - v[2][0]) + (v[0][0] - v[2][0]) * (p[1] - v[2][1])) / det;
    [w0, w1, 1.0 - w0 - w1]
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pairwise (cascade) summation in a fixed order, so totals are reproducible
/// regardless of how the inputs were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_grid_counts_and_radius() {
        let r = Region::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 2.0] };
        let (pts, h) = r.grid(2);
        assert_eq!(pts.len(), 25);
        assert!((h - (0.25f64 * 0.25 + 0.5 * 0.5).sqrt()).abs() < 1e-15);
        assert_eq!(pts.last().unwrap(), &vec![1.0, 2.0]);
    }

    #[test]
    fn triangle_grid_includes_vertices() {
        let t = Region::Triangle([[0.0, 0.0], [1.0, 0.0], [0.5, 0.75f64.sqrt()]]);
        let (pts, _) = t.grid(3);
        assert_eq!(pts.len(), 45);
        for v in [[0.0, 0.0], [1.0, 0.0]] {
            assert!(pts.iter().any(|p| distance(p, &v) < 1e-15));
        }
        assert!(t.contains(&[0.5, 0.2], 0.0));
        assert!(!t.contains(&[0.9, 0.8], 1e-12));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_exact_values() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }

    #[test]
    fn bracket_product_covers_sign_changes() {
        let b = Bracket::new(-1.0, 2.0).mul(&Bracket::new(-3.0, 0.5));
        assert_eq!(b, Bracket::new(-6.0, 3.0));
    }
}
