//! Serialized artifacts: model summaries, validation verdicts, CSV samples.
//!
//! Field order is fixed by the struct definitions and floats print in
//! shortest round-trip form, so identical inputs give identical bytes.

use std::fmt::Write;

use serde::Serialize;

use fif_core::dimension::BoundsReport;
use fif_core::fif::{Family, FifModel, WellDefinedness};
use fif_core::{Bracket, Expr, Point};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSummary {
    pub s: Expr,
    pub q: Expr,
    pub s_sup: Bracket,
    pub q_sup: Bracket,
}

/// Derived constants of a validated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub dim: usize,
    pub n_maps: usize,
    pub n_nodes: usize,
    pub solved: Option<Family>,
    pub maps: Vec<MapSummary>,
    pub s_norm: Bracket,
    pub m_bound: Bracket,
    pub range: Bracket,
    pub eta: f64,
}

impl ModelSummary {
    pub fn of(model: &FifModel) -> Self {
        let maps = model
            .scale()
            .iter()
            .zip(model.displacement())
            .map(|(s, q)| MapSummary { s: s.expr.clone(), q: q.expr.clone(), s_sup: s.sup, q_sup: q.sup })
            .collect();
        ModelSummary {
            dim: model.domain().dim(),
            n_maps: model.n_maps(),
            n_nodes: model.nodes().len(),
            solved: model.solved_family(),
            maps,
            s_norm: model.s_norm(),
            m_bound: model.m_bound(),
            range: model.range(),
            eta: model.eta(),
        }
    }
}

/// Tolerance on `|f*(v) - p(v)|` over the nodes.
pub const INTERPOLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub name: String,
    pub join_up_residual: f64,
    pub well_definedness: WellDefinedness,
    /// `max |f*(v) - p(v)|` over `V`.
    pub interpolation_error: f64,
    pub pass: bool,
    pub model: ModelSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullReport {
    pub name: String,
    pub description: Option<String>,
    pub validation: ValidationReport,
    pub bounds: BoundsReport,
}

/// CSV with columns `x1..xm,value`, one row per point.
pub fn sample_csv(dim: usize, rows: &[(Point, f64)]) -> String {
    let mut out = String::new();
    for u in 1..=dim {
        let _ = write!(out, "x{u},");
    }
    out.push_str("value\n");
    for (p, v) in rows {
        for x in p {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = vec![(vec![0.0, 0.5], 1.0), (vec![0.25, 1.0], -0.125)];
        assert_eq!(sample_csv(2, &rows), "x1,x2,value\n0,0.5,1\n0.25,1,-0.125\n");
    }
}
