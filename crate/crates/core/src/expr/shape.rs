//! Declared shape facts, numeric audits and rigorous sup/inf brackets.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Expr;
use crate::region::{distance, Bracket, Point, Region};

/// `|e(x) - e(x')| <= constant * |x - x'|^exponent` on the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holder {
    pub exponent: f64,
    pub constant: f64,
}

/// Facts declared for one expression. Axis `0` stands for joint
/// (all-coordinates) affinity, concavity or convexity; `1..=m` for a single
/// coordinate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShapeFacts {
    #[serde(default)]
    pub is_constant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_value: Option<f64>,
    #[serde(default)]
    pub affine_in: BTreeSet<usize>,
    #[serde(default)]
    pub concave_in: BTreeSet<usize>,
    #[serde(default)]
    pub convex_in: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<Holder>,
}

impl ShapeFacts {
    pub fn constant(c: f64) -> Self {
        ShapeFacts { is_constant: true, constant_value: Some(c), ..Default::default() }
    }

    /// Affine in every axis jointly, Lipschitz with constant `lipschitz`.
    pub fn affine(lipschitz: f64) -> Self {
        ShapeFacts {
            affine_in: [0].into_iter().collect(),
            holder: Some(Holder { exponent: 1.0, constant: lipschitz }),
            ..Default::default()
        }
    }

    /// Closure under the implications between facts, for an `m`-axis domain.
    pub fn normalized(&self, m: usize) -> ShapeFacts {
        let all: BTreeSet<usize> = (0..=m).collect();
        let mut f = self.clone();
        if f.is_constant {
            f.affine_in = all.clone();
            f.concave_in = all.clone();
            f.convex_in = all;
            if f.holder.is_none() {
                f.holder = Some(Holder { exponent: 1.0, constant: 0.0 });
            }
            return f;
        }
        for set in [&mut f.affine_in, &mut f.concave_in, &mut f.convex_in] {
            if set.contains(&0) {
                set.extend(1..=m);
            }
            if m == 1 && set.contains(&1) {
                set.insert(0);
            }
        }
        let affine = f.affine_in.clone();
        f.concave_in.extend(affine.iter().copied());
        f.convex_in.extend(affine.iter().copied());
        let both: Vec<usize> =
            f.concave_in.intersection(&f.convex_in).copied().collect();
        f.affine_in.extend(both);
        f
    }

    /// Adds facts that follow from the expression's structure: constancy,
    /// joint affinity of degree-one polynomials, per-axis affinity of
    /// multilinear ones, and a Lipschitz constant for both.
    pub fn with_structure(&self, e: &Expr, region: &Region) -> ShapeFacts {
        let m = region.dim();
        let mut f = self.clone();
        if e.is_constant() {
            let c = e.eval(&vec![0.0; m]);
            f.is_constant = true;
            f.constant_value.get_or_insert(c);
            return f.normalized(m);
        }
        if let Some(deg) = degrees(e) {
            if deg.total <= 1 {
                f.affine_in.insert(0);
            }
            if deg.per_axis.iter().all(|&d| d <= 1) {
                f.affine_in.extend(1..=m);
            }
            if f.holder.is_none() && deg.per_axis.iter().all(|&d| d <= 1) {
                if let Region::Box { lo, hi } = region {
                    let h = multilinear_lipschitz(e, lo, hi);
                    f.holder = Some(Holder { exponent: 1.0, constant: h });
                } else if deg.total <= 1 {
                    let o = vec![0.0; m];
                    let e0 = e.eval(&o);
                    let g2: f64 = (0..m)
                        .map(|u| {
                            let mut x = o.clone();
                            x[u] = 1.0;
                            (e.eval(&x) - e0).powi(2)
                        })
                        .sum();
                    f.holder = Some(Holder { exponent: 1.0, constant: g2.sqrt() * (1.0 + 1e-12) });
                }
            }
        }
        f.normalized(m)
    }

    pub fn is_affine(&self, axis: usize) -> bool {
        self.affine_in.contains(&axis)
    }

    pub fn is_concave(&self, axis: usize) -> bool {
        self.concave_in.contains(&axis)
    }

    pub fn is_convex(&self, axis: usize) -> bool {
        self.convex_in.contains(&axis)
    }
}

/// Degree bound of a polynomial expression; `None` when not polynomial.
pub(crate) struct Degrees {
    pub total: u32,
    pub per_axis: Vec<u32>,
}

pub(crate) fn degrees(e: &Expr) -> Option<Degrees> {
    let m = e.max_axis();
    fn go(e: &Expr, m: usize) -> Option<(u32, Vec<u32>)> {
        match e {
            Expr::Const(_) => Some((0, vec![0; m])),
            Expr::Var(u) => {
                let mut v = vec![0; m];
                v[*u - 1] = 1;
                Some((1, v))
            }
            Expr::Neg(a) => go(a, m),
            Expr::Add(a, b) => {
                let (ta, va) = go(a, m)?;
                let (tb, vb) = go(b, m)?;
                Some((ta.max(tb), va.iter().zip(&vb).map(|(x, y)| *x.max(y)).collect()))
            }
            Expr::Mul(a, b) => {
                let (ta, va) = go(a, m)?;
                let (tb, vb) = go(b, m)?;
                Some((ta + tb, va.iter().zip(&vb).map(|(x, y)| x + y).collect()))
            }
            Expr::Pow(a, p) if p.fract() == 0.0 && *p <= 64.0 => {
                let (t, v) = go(a, m)?;
                let k = *p as u32;
                Some((t * k, v.iter().map(|d| d * k).collect()))
            }
            Expr::Pow(..) | Expr::Sin(_) | Expr::Cos(_) => None,
        }
    }
    go(e, m).map(|(total, per_axis)| Degrees { total, per_axis })
}

/// Lipschitz constant of a multilinear function on a box: the per-axis
/// partial derivative is constant along its own axis, so its extremes are
/// at corners.
pub(crate) fn multilinear_lipschitz(e: &Expr, lo: &[f64], hi: &[f64]) -> f64 {
    let m = lo.len();
    let mut sum = 0.0;
    for u in 0..m {
        let mut best: f64 = 0.0;
        for mask in 0..(1u32 << m) {
            if mask & (1 << u) != 0 {
                continue;
            }
            let mut a: Vec<f64> =
                (0..m).map(|v| if mask & (1 << v) != 0 { hi[v] } else { lo[v] }).collect();
            let mut b = a.clone();
            a[u] = lo[u];
            b[u] = hi[u];
            let d = (e.eval(&b) - e.eval(&a)) / (hi[u] - lo[u]);
            best = best.max(d.abs());
        }
        sum += best * best;
    }
    sum.sqrt() * (1.0 + 1e-12)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BracketError {
    #[error("non-constant expression `{0}` has no Hölder facts for the grid slack")]
    MissingHolder(String),
}

/// Grid depth giving a few thousand samples in every supported region.
pub fn default_depth(region: &Region) -> u32 {
    match region {
        Region::Box { lo, .. } => match lo.len() {
            1 => 12,
            2 => 6,
            _ => 4,
        },
        Region::Triangle(_) => 8,
    }
}

fn slack(e: &Expr, h: f64, holder: Option<&Holder>) -> Result<f64, BracketError> {
    if e.is_constant() {
        return Ok(0.0);
    }
    match holder {
        Some(hd) => Ok(hd.constant * h.powf(hd.exponent)),
        None => Err(BracketError::MissingHolder(e.to_string())),
    }
}

/// Encloses the range of `e` over the region.
pub fn range_bracket(
    e: &Expr,
    region: &Region,
    depth: u32,
    holder: Option<&Holder>,
) -> Result<Bracket, BracketError> {
    let (pts, h) = region.grid(depth);
    let sl = slack(e, h, holder)?;
    let (lo, hi) = pts.iter().map(|p| e.eval(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    Ok(Bracket::new(lo - sl, hi + sl))
}

/// `[max |e| on the grid, that + slack]`, enclosing the sup norm.
pub fn sup_norm(
    e: &Expr,
    region: &Region,
    depth: u32,
    holder: Option<&Holder>,
) -> Result<Bracket, BracketError> {
    let (pts, h) = region.grid(depth);
    let sl = slack(e, h, holder)?;
    let m = pts.iter().map(|p| e.eval(p).abs()).fold(0.0, f64::max);
    Ok(Bracket::new(m, m + sl))
}

/// `[min |e| on the grid - slack (clamped at 0), min |e| on the grid]`.
pub fn inf_abs(
    e: &Expr,
    region: &Region,
    depth: u32,
    holder: Option<&Holder>,
) -> Result<Bracket, BracketError> {
    let (pts, h) = region.grid(depth);
    let sl = slack(e, h, holder)?;
    let m = pts.iter().map(|p| e.eval(p).abs()).fold(f64::INFINITY, f64::min);
    Ok(Bracket::new((m - sl).max(0.0), m))
}

/// A declared fact that failed on a sampled configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeViolation {
    pub fact: String,
    pub at: Point,
    pub excess: f64,
}

fn axis_name(r: usize) -> String {
    if r == 0 {
        "jointly".to_string()
    } else {
        format!("in x{r}")
    }
}

fn sample_points(region: &Region, samples: usize) -> Vec<Point> {
    let div = samples.max(3) - 1;
    region.grid_with(div).0
}

/// Pairs of sample points for a check along axis `r` (0: all pairs, capped).
fn pairs_for_axis(pts: &[Point], r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if r == 0 {
        const CAP: usize = 400;
        let stride = pts.len().div_ceil(CAP).max(1);
        let sub: Vec<usize> = (0..pts.len()).step_by(stride).collect();
        for (a, &i) in sub.iter().enumerate() {
            for &j in &sub[a + 1..] {
                out.push((i, j));
            }
        }
        return out;
    }
    let mut groups: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        let key: Vec<i64> = p
            .iter()
            .enumerate()
            .filter(|(u, _)| *u != r - 1)
            .map(|(_, t)| (t * 1e9).round() as i64)
            .collect();
        groups.entry(key).or_default().push(i);
    }
    let mut keys: Vec<_> = groups.keys().cloned().collect();
    keys.sort();
    for k in keys {
        let g = &groups[&k];
        for (a, &i) in g.iter().enumerate() {
            for &j in &g[a + 1..] {
                out.push((i, j));
            }
        }
    }
    out
}

/// Tests every declared fact on sampled points, midpoints and pairs. A pass
/// is evidence only; callers treat any violation as a hard error.
pub fn audit_shape(
    e: &Expr,
    facts: &ShapeFacts,
    region: &Region,
    samples: usize,
    tol: f64,
) -> Vec<ShapeViolation> {
    let m = region.dim();
    let pts = sample_points(region, samples);
    let vals: Vec<f64> = pts.iter().map(|p| e.eval(p)).collect();
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = tol * scale;
    let mut out = Vec::new();

    if facts.is_constant {
        let c = facts.constant_value.unwrap_or(vals[0]);
        if let Some((i, d)) = vals
            .iter()
            .map(|v| (v - c).abs())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
        {
            if d > tol {
                out.push(ShapeViolation { fact: "constant".into(), at: pts[i].clone(), excess: d });
            }
        }
    }

    let checks: [(&BTreeSet<usize>, &str); 3] =
        [(&facts.affine_in, "affine"), (&facts.concave_in, "concave"), (&facts.convex_in, "convex")];
    for (set, kind) in checks {
        if facts.is_constant {
            break;
        }
        for &r in set.iter().filter(|&&r| r <= m) {
            let mut worst: Option<(Point, f64)> = None;
            for (i, j) in pairs_for_axis(&pts, r) {
                let mid: Point = pts[i].iter().zip(&pts[j]).map(|(a, b)| 0.5 * (a + b)).collect();
                let gap = e.eval(&mid) - 0.5 * (vals[i] + vals[j]);
                let excess = match kind {
                    "affine" => gap.abs(),
                    "concave" => -gap,
                    _ => gap,
                };
                if excess > tol && worst.as_ref().is_none_or(|w| excess > w.1) {
                    worst = Some((mid, excess));
                }
            }
            if let Some((at, excess)) = worst {
                out.push(ShapeViolation { fact: format!("{kind} {}", axis_name(r)), at, excess });
            }
        }
    }

    if let Some(h) = facts.holder {
        if !(h.exponent > 0.0 && h.exponent <= 1.0) || h.constant < 0.0 {
            out.push(ShapeViolation {
                fact: "hölder exponent in (0,1], constant >= 0".into(),
                at: vec![],
                excess: f64::NAN,
            });
        } else {
            let est = holder_seminorm_estimate(e, h.exponent, region, 20_000);
            let excess = est - h.constant * (1.0 + 1e-9);
            if excess > tol {
                out.push(ShapeViolation {
                    fact: format!("hölder({}, {})", h.exponent, h.constant),
                    at: vec![],
                    excess,
                });
            }
        }
    }
    out
}

/// Max of `|e(x) - e(x')| / |x - x'|^eta` over sampled pairs: all pairs of a
/// coarse grid with about `pairs` pairs, plus neighbouring pairs on the
/// default fine grid. A lower estimate of the true Hölder constant.
pub fn holder_seminorm_estimate(e: &Expr, eta: f64, region: &Region, pairs: usize) -> f64 {
    if e.is_constant() {
        return 0.0;
    }
    let ratio = |a: &[f64], b: &[f64], va: f64, vb: f64| {
        let d = distance(a, b);
        if d > 0.0 {
            (va - vb).abs() / d.powf(eta)
        } else {
            0.0
        }
    };
    let m = region.dim();
    let want_pts = ((2.0 * pairs as f64).sqrt() as usize).max(2);
    let div = match region {
        Region::Box { .. } => ((want_pts as f64).powf(1.0 / m as f64) as usize).max(2) - 1,
        Region::Triangle(_) => ((2.0 * want_pts as f64).sqrt() as usize).max(2) - 1,
    };
    let (pts, _) = region.grid_with(div.max(1));
    let vals: Vec<f64> = pts.iter().map(|p| e.eval(p)).collect();
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(ratio(&pts[i], &pts[j], vals[i], vals[j]));
        }
    }
    // Neighbouring pairs on the fine grid catch steep local behaviour.
    let depth = default_depth(region);
    let fine_div = 1usize << depth;
    let (fine, _) = region.grid_with(fine_div);
    if let Region::Box { .. } = region {
        let fv: Vec<f64> = fine.iter().map(|p| e.eval(p)).collect();
        let side = fine_div + 1;
        for (idx, p) in fine.iter().enumerate() {
            let mut stride = 1;
            for _ in 0..m {
                if (idx / stride) % side + 1 < side {
                    let j = idx + stride;
                    best = best.max(ratio(p, &fine[j], fv[idx], fv[j]));
                }
                stride *= side;
            }
        }
    } else {
        for w in fine.windows(2) {
            best = best.max(ratio(&w[0], &w[1], e.eval(&w[0]), e.eval(&w[1])));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn unit() -> Region {
        Region::Box { lo: vec![0.0], hi: vec![1.0] }
    }

    #[test]
    fn constant_brackets_are_exact() {
        let c = parse_expr("3/4").unwrap();
        assert_eq!(sup_norm(&c, &unit(), 12, None).unwrap(), Bracket::exact(0.75));
        let c = parse_expr("3/4 + 0*x1").unwrap();
        assert_eq!(inf_abs(&c, &unit(), 12, None).unwrap(), Bracket::exact(0.75));
        let c = parse_expr("1/2").unwrap();
        assert_eq!(inf_abs(&c, &unit(), 3, None).unwrap(), Bracket::exact(0.5));
    }

    #[test]
    fn sine_brackets() {
        let e = parse_expr("sin(x1)/4").unwrap();
        let h = Holder { exponent: 1.0, constant: 0.25 };
        let s = sup_norm(&e, &unit(), 12, Some(&h)).unwrap();
        assert!(s.contains(1f64.sin() / 4.0));
        assert!(s.width() < 1e-4);
        let i = inf_abs(&e, &unit(), 12, Some(&h)).unwrap();
        assert!(i.contains(0.0));
        assert!(matches!(sup_norm(&e, &unit(), 12, None), Err(BracketError::MissingHolder(_))));
    }

    #[test]
    fn concave_quadratic_sup() {
        let e = parse_expr("-x1^2/6 + 1/2").unwrap();
        let h = Holder { exponent: 1.0, constant: 1.0 / 3.0 };
        assert!(sup_norm(&e, &unit(), 12, Some(&h)).unwrap().contains(0.5));
        let facts = ShapeFacts { concave_in: [1].into_iter().collect(), ..Default::default() };
        assert!(audit_shape(&e, &facts.normalized(1), &unit(), 33, 1e-9).is_empty());
    }

    #[test]
    fn audit_flags_false_affinity() {
        let e = parse_expr("x1^0.8/2").unwrap();
        let facts = ShapeFacts { affine_in: [1].into_iter().collect(), ..Default::default() };
        let v = audit_shape(&e, &facts.normalized(1), &unit(), 33, 1e-9);
        assert!(!v.is_empty());
        assert!(v[0].fact.starts_with("affine"));
    }

    #[test]
    fn audit_accepts_constant() {
        let e = parse_expr("0.3").unwrap();
        assert!(audit_shape(&e, &ShapeFacts::constant(0.3).normalized(1), &unit(), 9, 1e-9).is_empty());
        let bad = ShapeFacts::constant(0.4).normalized(1);
        assert_eq!(audit_shape(&e, &bad, &unit(), 9, 1e-9).len(), 1);
    }

    #[test]
    fn holder_estimates() {
        assert_eq!(holder_seminorm_estimate(&Expr::Const(2.0), 0.5, &unit(), 1000), 0.0);
        let id = parse_expr("x1").unwrap();
        assert!((holder_seminorm_estimate(&id, 1.0, &unit(), 1000) - 1.0).abs() < 1e-12);
        let p = parse_expr("x1^0.8").unwrap();
        assert!(holder_seminorm_estimate(&p, 0.8, &unit(), 1000) >= 1.0 - 1e-12);
    }

    #[test]
    fn structure_detects_multilinear() {
        let r = Region::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let e = parse_expr("1 + 2*x1 + 3*x1*x2").unwrap();
        let f = ShapeFacts::default().with_structure(&e, &r);
        assert!(f.is_affine(1) && f.is_affine(2) && !f.is_affine(0));
        let h = f.holder.unwrap();
        assert!((h.constant - (25f64 + 9.0).sqrt()).abs() < 1e-9);
        assert!(audit_shape(&e, &f, &r, 9, 1e-9).is_empty());
    }

    #[test]
    fn normalization_rules() {
        let f = ShapeFacts { affine_in: [0].into_iter().collect(), ..Default::default() }.normalized(2);
        assert_eq!(f.concave_in, [0, 1, 2].into_iter().collect());
        let g = ShapeFacts { concave_in: [1].into_iter().collect(), ..Default::default() }.normalized(1);
        assert!(g.is_concave(0));
        let c = ShapeFacts::constant(1.0).normalized(3);
        assert!(c.is_convex(3) && c.is_affine(0));
    }
}
