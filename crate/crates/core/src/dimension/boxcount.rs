//! Box counts of the graph from cell brackets and the log-log slope.
//!
//! Each level is counted twice: over the sampled value range of each cell,
//! which the graph covers, and over the rigorous enclosure, which covers
//! the graph. The slope is fitted to the sampled counts.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fif::{cell_budget, FifModel, GraphSample, Layout, SampleError, SampleLadder, DEFAULT_REFINE};

/// Relative slack when matching `δ` against cell sides.
const SIDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxError {
    #[error("box side must be positive, got {0}")]
    Delta(f64),
    #[error("box side {delta} is finer than the cells (side {side})")]
    Resolution { delta: f64, side: f64 },
    #[error("window k = {kmin}..={kmax} needs kmin >= 2 and at least two levels")]
    Window { kmin: usize, kmax: usize },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    /// `m = 1`, columns are the cells: `Σ max(1, ⌈osc / δ⌉)`.
    Columns,
    /// `m = 1`, dyadic columns with `δ`-aligned voxels in the value axis.
    Voxels,
    /// Cubes and the gasket: `Σ (⌈osc / δ⌉ + 1)` with `δ` the cell side.
    Prisms,
}

/// Which per-cell value range a count covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountBasis {
    /// Hull of the exact values on the cell's refined vertices. The graph is
    /// connected over each cell, so this range is covered by it.
    Sampled,
    /// The rigorous enclosure `[lo, hi]`, which contains the graph.
    Enclosure,
}

fn cell_range(c: &crate::fif::CellBracket, basis: CountBasis) -> (f64, f64) {
    match basis {
        CountBasis::Sampled => (c.vmin, c.vmax),
        CountBasis::Enclosure => (c.lo.min(c.vmin), c.hi.max(c.vmax)),
    }
}

fn method_for(sample: &GraphSample, delta: f64) -> CountMethod {
    match &sample.layout {
        Layout::Grid { coords } if coords.len() == 1 => {
            let aligned = coords[0].windows(2).all(|w| ((w[1] - w[0]) - delta).abs() <= SIDE_TOL * delta);
            if aligned {
                CountMethod::Columns
            } else {
                CountMethod::Voxels
            }
        }
        _ => CountMethod::Prisms,
    }
}

fn osc(c: &crate::fif::CellBracket, basis: CountBasis) -> f64 {
    let (lo, hi) = cell_range(c, basis);
    (hi - lo).max(0.0)
}

/// Number of `δ`-boxes over the sampled value ranges. `δ` may not be finer
/// than the cells.
pub fn box_count(sample: &GraphSample, delta: f64) -> Result<u64, BoxError> {
    box_count_with(sample, delta, CountBasis::Sampled)
}

pub fn box_count_with(sample: &GraphSample, delta: f64, basis: CountBasis) -> Result<u64, BoxError> {
    if !(delta > 0.0) {
        return Err(BoxError::Delta(delta));
    }
    let side = sample.max_side();
    if side > delta * (1.0 + SIDE_TOL) {
        return Err(BoxError::Resolution { delta, side });
    }
    Ok(match method_for(sample, delta) {
        CountMethod::Columns => {
            sample.cells.par_iter().map(|c| ((osc(c, basis) / delta).ceil() as u64).max(1)).sum()
        }
        CountMethod::Prisms => sample.cells.par_iter().map(|c| (osc(c, basis) / delta).ceil() as u64 + 1).sum(),
        CountMethod::Voxels => voxel_count(sample, delta, basis),
    })
}

fn voxel_count(sample: &GraphSample, delta: f64, basis: CountBasis) -> u64 {
    let Layout::Grid { coords } = &sample.layout else { unreachable!("voxels are for intervals") };
    let x = &coords[0];
    let (x0, x1) = (x[0], x[x.len() - 1]);
    let n_cols = (((x1 - x0) / delta) - SIDE_TOL).ceil().max(1.0) as usize;
    let mut lo = vec![f64::INFINITY; n_cols];
    let mut hi = vec![f64::NEG_INFINITY; n_cols];
    for (t, c) in sample.cells.iter().enumerate() {
        let a = ((x[t] - x0) / delta + SIDE_TOL).floor() as usize;
        let b = (((x[t + 1] - x0) / delta - SIDE_TOL).ceil() as usize).max(a + 1);
        for col in a.min(n_cols - 1)..b.min(n_cols) {
            let (a, b) = cell_range(c, basis);
            lo[col] = lo[col].min(a);
            hi[col] = hi[col].max(b);
        }
    }
    lo.iter()
        .zip(&hi)
        .map(|(l, h)| ((h / delta).floor() - (l / delta).floor()) as u64 + 1)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCountPoint {
    pub k: usize,
    pub delta: f64,
    /// Count over the sampled ranges.
    pub count: u64,
    /// Count over the enclosures; never below `count`.
    pub count_enclosure: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalEstimate {
    pub method: CountMethod,
    pub series: Vec<BoxCountPoint>,
    /// Least-squares slope of `log N` against `log(1/δ)` for the sampled
    /// counts.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// Slope of the enclosure counts. Biased upwards at levels refined by
    /// few extra levels, where the enclosure slack is wide.
    pub slope_enclosure: f64,
}

/// Least-squares line through `(x, y)`: `(slope, intercept, rms residual)`.
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Default window: the finest level with at most `5·10⁵` cells, and the
/// six levels below it.
pub fn default_window(n_maps: usize) -> (usize, usize) {
    let kmax = ((5e5f64).ln() / (n_maps as f64).ln()).floor().max(3.0) as usize;
    (2.max(kmax.saturating_sub(6)), kmax)
}

/// Window from optional ends: a missing `kmax` takes the default, a missing
/// `kmin` sits six levels below `kmax` (at least 2).
pub fn resolve_window(n_maps: usize, kmin: Option<usize>, kmax: Option<usize>) -> Result<(usize, usize), BoxError> {
    let (dmin, dmax) = default_window(n_maps);
    let kmax = kmax.unwrap_or(dmax);
    let kmin = kmin.unwrap_or(if kmax == dmax { dmin } else { 2.max(kmax.saturating_sub(6)) });
    if kmin < 2 || kmin >= kmax {
        return Err(BoxError::Window { kmin, kmax });
    }
    Ok((kmin, kmax))
}

/// Box side used at level `k`: the cell side, or the dyadic side just above
/// it when the cells of an interval differ in width.
fn delta_for(sample: &GraphSample, diameter: f64) -> f64 {
    let side = sample.max_side();
    match method_for(sample, side) {
        CountMethod::Voxels => {
            let j = ((diameter / side).log2() + SIDE_TOL).floor();
            diameter * 2f64.powf(-j)
        }
        _ => side,
    }
}

/// Slope of `log N_δ` over levels `kmin..=kmax` of an existing ladder.
pub fn empirical_from_ladder(
    model: &FifModel,
    ladder: &SampleLadder,
    kmin: usize,
    kmax: usize,
) -> Result<EmpiricalEstimate, BoxError> {
    if kmin < 2 || kmin >= kmax || kmax > ladder.kmax() {
        return Err(BoxError::Window { kmin, kmax });
    }
    let diameter = model.geometry().diameter;
    let mut series: Vec<BoxCountPoint> = Vec::new();
    let mut method = CountMethod::Columns;
    for k in kmin..=kmax {
        let sample = ladder.level(k);
        let delta = delta_for(sample, diameter);
        method = method_for(sample, delta);
        let point = BoxCountPoint {
            k,
            delta,
            count: box_count_with(sample, delta, CountBasis::Sampled)?,
            count_enclosure: box_count_with(sample, delta, CountBasis::Enclosure)?,
        };
        // Equal dyadic sides: keep the finer sample.
        match series.last_mut() {
            Some(last) if (last.delta - delta).abs() <= SIDE_TOL * delta => *last = point,
            _ => series.push(point),
        }
    }
    if series.len() < 2 {
        return Err(BoxError::Window { kmin, kmax });
    }
    let log = |count: fn(&BoxCountPoint) -> u64| -> Vec<(f64, f64)> {
        series.iter().map(|p| ((1.0 / p.delta).ln(), (count(p) as f64).ln())).collect()
    };
    let (slope, intercept, residual) = fit_line(&log(|p| p.count));
    let (slope_enclosure, _, _) = fit_line(&log(|p| p.count_enclosure));
    Ok(EmpiricalEstimate { method, series, slope, intercept, residual, slope_enclosure })
}

/// Box-counting slope over levels `kmin..=kmax`.
pub fn empirical_dimension(model: &FifModel, kmin: usize, kmax: usize) -> Result<EmpiricalEstimate, BoxError> {
    if kmin < 2 || kmin >= kmax {
        return Err(BoxError::Window { kmin, kmax });
    }
    let ladder = SampleLadder::build(model, kmax, DEFAULT_REFINE, cell_budget())?;
    empirical_from_ladder(model, &ladder, kmin, kmax)
}
