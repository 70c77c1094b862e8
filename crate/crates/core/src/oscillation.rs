//! Cell oscillations, totals of order `k` and the oscillation seminorm.
//!
//! `Osc_ω(f) = sup f − inf f` over `l_ω(K)`, `Osc(k, f) = Σ_{|ω|=k} Osc_ω(f)`,
//! `[f]_η = sup_k Osc(k, f) / Λ^{k(log_Λ N − η)}`. Brackets for `f*` come from
//! [`GraphSample`]: vertex values give the lower end, rigorous cell
//! enclosures the upper end.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, Holder};
use crate::fif::{cell_budget, FifModel, GraphSample, SampleError, SampleLadder, DEFAULT_REFINE};
use crate::ifs::{CellAddress, Domain};
use crate::region::{pairwise_sum, Bracket};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscError {
    #[error("address {address} is not a level-{level} cell")]
    UnknownAddress { address: String, level: usize },
    #[error("eta {eta} outside [0, {max}]")]
    EtaRange { eta: f64, max: f64 },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscTable {
    pub level: usize,
    pub cells: Vec<Bracket>,
    pub total: Bracket,
}

fn cell_bracket(c: &crate::fif::CellBracket) -> Bracket {
    Bracket::new((c.vmax - c.vmin).max(0.0), (c.hi - c.lo).max(c.vmax - c.vmin))
}

pub fn cell_osc(sample: &GraphSample, w: &CellAddress, n_maps: usize) -> Result<Bracket, OscError> {
    if w.level() != sample.level || w.0.iter().any(|&i| i >= n_maps) {
        return Err(OscError::UnknownAddress { address: w.to_string(), level: sample.level });
    }
    Ok(cell_bracket(&sample.cells[sample.cell_index(w)]))
}

pub fn osc_table(sample: &GraphSample) -> OscTable {
    let cells: Vec<Bracket> = sample.cells.iter().map(cell_bracket).collect();
    let total = total_of(&cells);
    OscTable { level: sample.level, cells, total }
}

fn total_of(cells: &[Bracket]) -> Bracket {
    let lo: Vec<f64> = cells.iter().map(|b| b.lo).collect();
    let hi: Vec<f64> = cells.iter().map(|b| b.hi).collect();
    Bracket::new(pairwise_sum(&lo), pairwise_sum(&hi))
}

/// `Osc(k, f*)` bracket at the sample's level.
pub fn total_osc(sample: &GraphSample) -> Bracket {
    total_of(&sample.cells.iter().map(cell_bracket).collect::<Vec<_>>())
}

/// `Λ^{k(log_Λ N − η)} = N^k / Λ^{kη}`.
pub fn growth(domain: &Domain, eta: f64, k: usize) -> f64 {
    let g = domain.geometry();
    (g.n_maps as f64).powi(k as i32) / g.lambda.powf(k as f64 * eta)
}

fn check_eta(domain: &Domain, eta: f64) -> Result<(), OscError> {
    let g = domain.geometry();
    let max = (g.n_maps as f64).ln() / g.lambda.ln();
    if !(eta >= 0.0 && eta <= max + 1e-12) {
        return Err(OscError::EtaRange { eta, max });
    }
    Ok(())
}

/// Lower estimate of `[f*]_η` from levels `1..=kmax` of a ladder.
pub fn seminorm_from(ladder: &SampleLadder, domain: &Domain, eta: f64, kmax: usize) -> Result<f64, OscError> {
    check_eta(domain, eta)?;
    Ok((1..=kmax.min(ladder.kmax()))
        .map(|k| total_osc(ladder.level(k)).lo / growth(domain, eta, k))
        .fold(0.0, f64::max))
}

/// Lower estimate of `[f*]_η`: the largest ratio over `k ≤ kmax`.
pub fn seminorm(model: &FifModel, eta: f64, kmax: usize) -> Result<f64, OscError> {
    check_eta(model.domain(), eta)?;
    let ladder = SampleLadder::build(model, kmax, DEFAULT_REFINE, cell_budget())?;
    seminorm_from(&ladder, model.domain(), eta, kmax)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeilingCheck {
    pub k: usize,
    pub osc_lo: f64,
    pub ceiling: f64,
    pub pass: bool,
}

/// `H |K|^η Λ^{k(log_Λ N − η)}`.
pub fn holder_ceiling(domain: &Domain, h: &Holder, k: usize) -> f64 {
    h.constant * domain.geometry().diameter.powf(h.exponent) * growth(domain, h.exponent, k)
}

fn ceiling_checks(domain: &Domain, h: &Holder, totals: impl Iterator<Item = (usize, f64)>) -> Vec<CeilingCheck> {
    totals
        .map(|(k, osc_lo)| {
            let ceiling = holder_ceiling(domain, h, k);
            CeilingCheck { k, osc_lo, ceiling, pass: osc_lo <= ceiling * (1.0 + 1e-12) + 1e-300 }
        })
        .collect()
}

/// Checks `Osc(k, f*)_lo ≤ H |K|^η Λ^{k(log_Λ N − η)}` for `k = 1..=kmax`.
pub fn holder_to_osc_check(model: &FifModel, holder: &Holder, kmax: usize) -> Result<Vec<CeilingCheck>, OscError> {
    let ladder = SampleLadder::build(model, kmax, DEFAULT_REFINE, cell_budget())?;
    Ok(ceiling_checks(model.domain(), holder, (1..=kmax).map(|k| (k, total_osc(ladder.level(k)).lo))))
}

/// Sampled `Osc(k, e)` of an expression: per cell, the spread of its values
/// at the cell's corners and centroid. A lower estimate of the true total.
pub fn expr_total_osc(domain: &Domain, e: &Expr, k: usize) -> Result<f64, OscError> {
    let cells = domain.cell_count(k).map_err(SampleError::from)?;
    let n = domain.n_maps();
    let v0 = domain.v0().to_vec();
    let spreads: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let w = CellAddress::from_index(idx, n, k);
            let l = domain.cell_map(&w);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut centroid = vec![0.0; domain.dim()];
            for v in &v0 {
                let p = l.apply(v);
                let y = e.eval(&p);
                lo = lo.min(y);
                hi = hi.max(y);
                for (c, x) in centroid.iter_mut().zip(&p) {
                    *c += x / v0.len() as f64;
                }
            }
            let y = e.eval(&centroid);
            (hi.max(y) - lo.min(y)).max(0.0)
        })
        .collect();
    Ok(pairwise_sum(&spreads))
}

/// Ceiling check for an expression with declared Hölder facts, on levels
/// `1..=kmax` capped so that `N^k` stays within `max_cells`.
pub fn expr_holder_check(domain: &Domain, e: &Expr, holder: &Holder, kmax: usize, max_cells: usize) -> Result<Vec<CeilingCheck>, OscError> {
    let n = domain.n_maps() as f64;
    let top = (1..=kmax).take_while(|&k| n.powi(k as i32) <= max_cells as f64).last().unwrap_or(0);
    let totals: Vec<(usize, f64)> =
        (1..=top).map(|k| expr_total_osc(domain, e, k).map(|t| (k, t))).collect::<Result<_, _>>()?;
    Ok(ceiling_checks(domain, holder, totals.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ShapeFacts;
    use crate::fif::{Displacement, Family, FifSpec};

    fn interval_model(p: impl Fn(f64) -> f64, s: f64) -> FifModel {
        let domain = Domain::interval(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], vec![false; 3]).unwrap();
        let data = domain.nodes().into_iter().map(|v| { let y = p(v[0]); (v, y) }).collect();
        FifModel::new(FifSpec {
            domain,
            data,
            scale: vec![(Expr::constant(s), ShapeFacts::default()); 3],
            displacement: Displacement::Solve(Family::Affine),
            eta: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn identity_totals_are_one() {
        let m = interval_model(|x| x, 0.0);
        let ladder = SampleLadder::build(&m, 8, 2, 1 << 20).unwrap();
        for k in 1..=8 {
            let t = total_osc(ladder.level(k));
            assert!((t.lo - 1.0).abs() < 1e-10 && t.hi >= t.lo, "{k}: {t:?}");
            let w = CellAddress(vec![1; k]);
            let c = cell_osc(ladder.level(k), &w, 3).unwrap();
            assert!((c.lo - 3f64.powi(-(k as i32))).abs() < 1e-12);
        }
        assert!((seminorm_from(&ladder, m.domain(), 1.0, 8).unwrap() - 1.0).abs() < 1e-10);
        let pass = holder_to_osc_check(&m, &Holder { exponent: 1.0, constant: 1.0 }, 6).unwrap();
        assert!(pass.iter().all(|c| c.pass));
        let fail = holder_to_osc_check(&m, &Holder { exponent: 1.0, constant: 0.5 }, 6).unwrap();
        assert!(!fail[0].pass);
    }

    #[test]
    fn constant_model_has_no_oscillation() {
        let m = interval_model(|_| 2.0, 0.5);
        assert_eq!(seminorm(&m, 0.7, 6).unwrap(), 0.0);
        let ladder = SampleLadder::build(&m, 4, 4, 1 << 20).unwrap();
        assert_eq!(total_osc(ladder.level(4)), Bracket::new(0.0, 0.0));
    }

    #[test]
    fn errors() {
        let m = interval_model(|x| x, 0.0);
        let ladder = SampleLadder::build(&m, 2, 0, 1 << 20).unwrap();
        assert!(cell_osc(ladder.level(2), &CellAddress(vec![0]), 3).is_err());
        assert!(cell_osc(ladder.level(2), &CellAddress(vec![0, 3]), 3).is_err());
        assert!(matches!(seminorm(&m, 1.5, 3), Err(OscError::EtaRange { .. })));
    }

    #[test]
    fn expression_ceiling() {
        let d = Domain::interval(vec![0.0, 4.0 / 15.0, 0.6, 1.0], vec![false; 3]).unwrap();
        let e = crate::parse_expr("x1^0.8/2").unwrap();
        let h = Holder { exponent: 0.8, constant: 0.5 };
        let checks = expr_holder_check(&d, &e, &h, 10, 1 << 20).unwrap();
        assert_eq!(checks.len(), 10);
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    }
}
