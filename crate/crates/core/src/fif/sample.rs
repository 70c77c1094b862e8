//! Rigorous per-cell value brackets of `f*` on levels `0..=kmax`.
//!
//! One fine table on `V_K`, `K = kmax + ρ`, is computed exactly. Each fine
//! cell's bracket is `[vmax - O, vmin + O] ∩ R` where `vmin, vmax` are its
//! vertex values and `O` bounds the oscillation of `f*` on the cell:
//!
//! `O(iω) = ‖s_i‖ O(ω) + |R| osc(s_i, cell ω) + osc(q_i, cell ω)`,
//! `O(∅) = |R|`, with `R` the range enclosure of `f*`. Coarser brackets are
//! hulls of their children, so brackets nest across levels.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::table::{strides, ConsistencyError, GridMaps, VertexTable};
use super::FifModel;
use crate::ifs::{CellAddress, DomainError};

pub const DEFAULT_REFINE: usize = 4;
pub const DEFAULT_CELL_BUDGET: usize = 10_000_000;

/// Cell budget from `FIF_CELL_BUDGET`, else [`DEFAULT_CELL_BUDGET`].
pub fn cell_budget() -> usize {
    std::env::var("FIF_CELL_BUDGET").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_CELL_BUDGET)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("level {level} needs {cells} cells, over the budget of {budget}")]
    Budget { level: usize, cells: f64, budget: usize },
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Sampled vertex extremes and a rigorous enclosure of `f*` on one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellBracket {
    pub vmin: f64,
    pub vmax: f64,
    /// `inf f*` over the cell is at least this.
    pub lo: f64,
    /// `sup f*` over the cell is at most this.
    pub hi: f64,
}

impl CellBracket {
    fn hull(&self, o: &CellBracket) -> CellBracket {
        CellBracket {
            vmin: self.vmin.min(o.vmin),
            vmax: self.vmax.max(o.vmax),
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    const EMPTY: CellBracket =
        CellBracket { vmin: f64::INFINITY, vmax: f64::NEG_INFINITY, lo: f64::INFINITY, hi: f64::NEG_INFINITY };
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Tensor order, axis 1 slowest. `coords[u]` are the level's knots.
    Grid { coords: Vec<Vec<f64>> },
    /// Address order; cells are homothetic copies with ratio `sigma`.
    Mesh { sigma: f64 },
}

/// Brackets of all level-`k` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub level: usize,
    pub layout: Layout,
    pub cells: Vec<CellBracket>,
    radix: Vec<usize>,
    flip: Vec<Vec<bool>>,
    n_maps: usize,
    diameter: f64,
}

impl GraphSample {
    /// Cells per axis (grid) or `[N^k]` (mesh).
    pub fn dims(&self) -> Vec<usize> {
        match &self.layout {
            Layout::Grid { coords } => coords.iter().map(|c| c.len() - 1).collect(),
            Layout::Mesh { .. } => vec![self.cells.len()],
        }
    }

    /// Storage index of a cell address.
    pub fn cell_index(&self, w: &CellAddress) -> usize {
        assert_eq!(w.level(), self.level, "address level must match the sample level");
        match &self.layout {
            Layout::Mesh { .. } => w.index(self.n_maps),
            Layout::Grid { .. } => {
                let m = self.radix.len();
                let dims = self.dims();
                let st = strides(&dims);
                let mut lin = 0;
                for u in 0..m {
                    let n = self.radix[u];
                    let mut t = 0;
                    let mut block = 1;
                    for &i in w.0.iter().rev() {
                        let wu = crate::ifs::mixed_radix(i, &self.radix)[u];
                        t = wu * block + if self.flip[u][wu] { block - 1 - t } else { t };
                        block *= n;
                    }
                    lin += t * st[u];
                }
                lin
            }
        }
    }

    /// Address of the cell stored at `index`.
    pub fn cell_address(&self, index: usize) -> CellAddress {
        match &self.layout {
            Layout::Mesh { .. } => CellAddress::from_index(index, self.n_maps, self.level),
            Layout::Grid { .. } => {
                let m = self.radix.len();
                let dims = self.dims();
                let st = strides(&dims);
                let k = self.level;
                let mut letters = vec![vec![0usize; k]; m];
                for u in 0..m {
                    let n = self.radix[u];
                    let mut t = (index / st[u]) % dims[u];
                    for (j, slot) in letters[u].iter_mut().enumerate() {
                        let block = n.pow((k - 1 - j) as u32);
                        let wu = t / block;
                        let r = t % block;
                        t = if self.flip[u][wu] { block - 1 - r } else { r };
                        *slot = wu;
                    }
                }
                CellAddress(
                    (0..k)
                        .map(|j| (0..m).fold(0, |acc, u| acc * self.radix[u] + letters[u][j]))
                        .collect(),
                )
            }
        }
    }

    /// Side lengths of a grid cell, or the side of a gasket cell.
    pub fn cell_sides(&self, index: usize) -> Vec<f64> {
        match &self.layout {
            Layout::Mesh { sigma } => vec![sigma * self.diameter],
            Layout::Grid { coords } => {
                let dims = self.dims();
                let st = strides(&dims);
                (0..dims.len())
                    .map(|u| {
                        let t = (index / st[u]) % dims[u];
                        coords[u][t + 1] - coords[u][t]
                    })
                    .collect()
            }
        }
    }

    /// Largest side over all cells of the level.
    pub fn max_side(&self) -> f64 {
        match &self.layout {
            Layout::Mesh { sigma } => sigma * self.diameter,
            Layout::Grid { coords } => coords
                .iter()
                .flat_map(|c| c.windows(2).map(|w| w[1] - w[0]))
                .fold(0.0, f64::max),
        }
    }

    /// Per-axis knot interval of a grid cell.
    pub fn cell_extent(&self, index: usize) -> Option<Vec<(f64, f64)>> {
        match &self.layout {
            Layout::Mesh { .. } => None,
            Layout::Grid { coords } => {
                let dims = self.dims();
                let st = strides(&dims);
                Some(
                    (0..dims.len())
                        .map(|u| {
                            let t = (index / st[u]) % dims[u];
                            (coords[u][t], coords[u][t + 1])
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Brackets for levels `0..=kmax` from one fine level.
#[derive(Debug, Clone)]
pub struct SampleLadder {
    pub fine_level: usize,
    pub refine: usize,
    pub levels: Vec<GraphSample>,
}

impl SampleLadder {
    pub fn level(&self, k: usize) -> &GraphSample {
        &self.levels[k]
    }

    pub fn kmax(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn build(model: &FifModel, kmax: usize, refine: usize, budget: usize) -> Result<SampleLadder, SampleError> {
        let n = model.n_maps() as f64;
        let cells_at = |k: usize| n.powi(k as i32);
        if cells_at(kmax) > budget as f64 {
            return Err(SampleError::Budget { level: kmax, cells: cells_at(kmax), budget });
        }
        let mut rho = 0;
        while rho < refine && cells_at(kmax + rho + 1) <= budget as f64 {
            rho += 1;
        }
        let fine = kmax + rho;
        model.domain().cell_count(fine)?;
        let table = model.evaluate_on_vk(fine)?;
        let top = match &table {
            VertexTable::Grid(g) => grid_top(model, g, kmax, rho),
            VertexTable::Mesh(t) => mesh_top(model, &t.values, fine, kmax, rho),
        };
        let mut levels = vec![top];
        while levels.last().unwrap().level > 0 {
            let next = coarsen(model, levels.last().unwrap());
            levels.push(next);
        }
        levels.reverse();
        Ok(SampleLadder { fine_level: fine, refine: rho, levels })
    }
}

/// Brackets for one level, refined by up to [`DEFAULT_REFINE`] levels
/// within the [`cell_budget`].
pub fn graph_sample(model: &FifModel, k: usize) -> Result<GraphSample, SampleError> {
    let mut ladder = SampleLadder::build(model, k, DEFAULT_REFINE, cell_budget())?;
    Ok(ladder.levels.pop().expect("ladder has level k"))
}

fn sample_shell(model: &FifModel, level: usize, layout: Layout, cells: Vec<CellBracket>) -> GraphSample {
    let domain = model.domain();
    let (radix, flip) = match domain.axes() {
        Some(_) => {
            let gm = GridMaps::new(domain);
            (gm.radix, gm.flip)
        }
        None => (vec![model.n_maps()], vec![vec![false; model.n_maps()]]),
    };
    GraphSample { level, layout, cells, radix, flip, n_maps: model.n_maps(), diameter: model.geometry().diameter }
}

fn slack(model: &FifModel, i: usize, d: f64) -> f64 {
    let r = model.range().abs_max();
    r * model.scale()[i].oscillation_bound(d) + model.displacement()[i].oscillation_bound(d)
}

const ROUND_UP: f64 = 1.0 + 1e-12;

fn finish(vmin: f64, vmax: f64, o: f64, model: &FifModel) -> CellBracket {
    let r = model.range();
    let lo = (vmax - o).max(r.lo).min(vmin);
    let hi = (vmin + o).min(r.hi).max(vmax);
    CellBracket { vmin, vmax, lo, hi }
}

fn grid_top(model: &FifModel, g: &super::table::GridTable, kmax: usize, rho: usize) -> GraphSample {
    let domain = model.domain();
    let gm = GridMaps::new(domain);
    let m = gm.radix.len();
    let fine = g.level;
    let s_hi: Vec<f64> = model.scale().iter().map(|f| f.sup.hi).collect();

    // O in tensor order, pushed level by level.
    let mut o = vec![model.range().width()];
    let mut coords = gm.coords(domain, 0);
    for level in 1..=fine {
        let blocks: Vec<usize> = gm.radix.iter().map(|n| n.pow(level as u32 - 1)).collect();
        let new_dims: Vec<usize> = blocks.iter().zip(&gm.radix).map(|(b, n)| b * n).collect();
        let new_st = strides(&new_dims);
        let old_st = strides(&blocks);
        let sides: Vec<Vec<f64>> = coords.iter().map(|c| c.windows(2).map(|w| w[1] - w[0]).collect()).collect();
        let total: usize = new_dims.iter().product();
        let prev = &o;
        let next: Vec<f64> = (0..total)
            .into_par_iter()
            .map_init(
                || vec![0usize; m],
                |letters, lin| {
                    let mut olin = 0;
                    let mut d2 = 0.0;
                    for u in 0..m {
                        let (w, src) = gm.cell_source(u, (lin / new_st[u]) % new_dims[u], blocks[u]);
                        letters[u] = w;
                        olin += src * old_st[u];
                        d2 += sides[u][src] * sides[u][src];
                    }
                    let i = gm.map_index(letters);
                    (s_hi[i] * prev[olin] + slack(model, i, d2.sqrt())) * ROUND_UP
                },
            )
            .collect();
        o = next;
        coords = gm.coords(domain, level);
    }

    let fine_dims: Vec<usize> = g.coords.iter().map(|c| c.len() - 1).collect();
    let fine_st = strides(&fine_dims);
    let pt_dims: Vec<usize> = g.coords.iter().map(Vec::len).collect();
    let pt_st = strides(&pt_dims);
    let factor: Vec<usize> = gm.radix.iter().map(|n| n.pow(rho as u32)).collect();
    let top_dims: Vec<usize> = gm.radix.iter().map(|n| n.pow(kmax as u32)).collect();
    let top_st = strides(&top_dims);
    let top_total: usize = top_dims.iter().product();
    let block_total: usize = factor.iter().product();
    let block_st = strides(&factor);

    let cells: Vec<CellBracket> = (0..top_total)
        .into_par_iter()
        .map(|tlin| {
            let mut acc = CellBracket::EMPTY;
            let base: Vec<usize> = (0..m).map(|u| ((tlin / top_st[u]) % top_dims[u]) * factor[u]).collect();
            for b in 0..block_total {
                let mut flin = 0;
                let mut plin = 0;
                for u in 0..m {
                    let t = base[u] + (b / block_st[u]) % factor[u];
                    flin += t * fine_st[u];
                    plin += t * pt_st[u];
                }
                let mut vmin = f64::INFINITY;
                let mut vmax = f64::NEG_INFINITY;
                for corner in 0..1usize << m {
                    let mut c = plin;
                    for u in 0..m {
                        if corner & (1 << u) != 0 {
                            c += pt_st[u];
                        }
                    }
                    vmin = vmin.min(g.values[c]);
                    vmax = vmax.max(g.values[c]);
                }
                acc = acc.hull(&finish(vmin, vmax, o[flin], model));
            }
            acc
        })
        .collect();
    let layout = Layout::Grid { coords: gm.coords(domain, kmax) };
    sample_shell(model, kmax, layout, cells)
}

fn mesh_top(model: &FifModel, values: &[[f64; 3]], fine: usize, kmax: usize, rho: usize) -> GraphSample {
    let n = model.n_maps();
    let sigma = model.domain().maps()[0].axes[0].scale;
    let diam = model.geometry().diameter;
    let s_hi: Vec<f64> = model.scale().iter().map(|f| f.sup.hi).collect();
    let mut o = vec![model.range().width()];
    for level in 1..=fine {
        let d = diam * sigma.powi(level as i32 - 1);
        let slacks: Vec<f64> = (0..n).map(|i| slack(model, i, d)).collect();
        let c = o.len();
        let prev = &o;
        o = (0..n * c).into_par_iter().map(|idx| (s_hi[idx / c] * prev[idx % c] + slacks[idx / c]) * ROUND_UP).collect();
    }
    let block = n.pow(rho as u32);
    let cells: Vec<CellBracket> = (0..n.pow(kmax as u32))
        .into_par_iter()
        .map(|t| {
            let mut acc = CellBracket::EMPTY;
            for f in t * block..(t + 1) * block {
                let v = values[f];
                let vmin = v[0].min(v[1]).min(v[2]);
                let vmax = v[0].max(v[1]).max(v[2]);
                acc = acc.hull(&finish(vmin, vmax, o[f], model));
            }
            acc
        })
        .collect();
    sample_shell(model, kmax, Layout::Mesh { sigma: sigma.powi(kmax as i32) }, cells)
}

fn coarsen(model: &FifModel, s: &GraphSample) -> GraphSample {
    let k = s.level - 1;
    match &s.layout {
        Layout::Mesh { sigma } => {
            let n = model.n_maps();
            let cells = s.cells.chunks(n).map(|c| c.iter().fold(CellBracket::EMPTY, |a, b| a.hull(b))).collect();
            let parent_sigma = sigma / model.domain().maps()[0].axes[0].scale;
            sample_shell(model, k, Layout::Mesh { sigma: parent_sigma }, cells)
        }
        Layout::Grid { .. } => {
            let gm = GridMaps::new(model.domain());
            let m = gm.radix.len();
            let dims = s.dims();
            let st = strides(&dims);
            let pdims: Vec<usize> = dims.iter().zip(&gm.radix).map(|(d, n)| d / n).collect();
            let pst = strides(&pdims);
            let mut cells = vec![CellBracket::EMPTY; pdims.iter().product()];
            for (lin, c) in s.cells.iter().enumerate() {
                let p: usize = (0..m).map(|u| ((lin / st[u]) % dims[u]) / gm.radix[u] * pst[u]).sum();
                cells[p] = cells[p].hull(c);
            }
            let layout = Layout::Grid { coords: gm.coords(model.domain(), k) };
            sample_shell(model, k, layout, cells)
        }
    }
}
