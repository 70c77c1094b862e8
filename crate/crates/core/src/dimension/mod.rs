//! Box-dimension bounds for the graph of `f*`, a box-counting estimate, and
//! their reconciliation.

mod boxcount;
mod gamma;
mod theorems;
mod witness;

use serde::Serialize;

pub use boxcount::{
    box_count, box_count_with, default_window, resolve_window, empirical_dimension, empirical_from_ladder, fit_line, BoxCountPoint, BoxError,
    CountBasis, CountMethod, EmpiricalEstimate,
};
pub use gamma::{gammas, Flavor, GammaClass, GammaReport, GammaTerm};
pub use theorems::{
    bounds_gasket, exact_dim_cube, lower_bound_cube, lower_bound_interval_variable_s, upper_bound, upper_bound_pinned,
    BoundEntry, BoundKind, Hypothesis,
};
pub use witness::{find_witness, find_witness_where, witness_height_check, CollinearWitness, HeightCheck, WitnessError};

use crate::fif::{cell_budget, FifModel, SampleLadder, DEFAULT_REFINE};
use crate::ifs::DomainGeometry;

/// Slack between the empirical slope and the theoretical bracket.
pub const RECONCILE_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub geometry: DomainGeometry,
    pub gammas: GammaReport,
    /// Witness with the largest `|L|` in any direction.
    pub witness: Option<CollinearWitness>,
    pub entries: Vec<BoundEntry>,
    pub best_lower: Option<f64>,
    pub best_upper: Option<f64>,
    pub exact: Option<f64>,
    pub empirical: Option<EmpiricalEstimate>,
    /// `INCONSISTENT` and other findings; empty when all agree.
    pub flags: Vec<String>,
}

impl BoundsReport {
    pub fn inconsistent(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with("INCONSISTENT"))
    }

    pub fn entries_of(&self, theorem: &str) -> impl Iterator<Item = &BoundEntry> {
        let t = theorem.to_string();
        self.entries.iter().filter(move |e| e.theorem == t)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReconcileOptions {
    pub kmin: Option<usize>,
    pub kmax: Option<usize>,
    /// Levels refined below `kmax` for the enclosures; default
    /// [`DEFAULT_REFINE`].
    pub refine: Option<usize>,
    /// Extra upper-bound entry evaluated with this `γ`.
    pub gamma_override: Option<f64>,
}

fn theory_entries(model: &FifModel, g: &GammaReport, gamma_override: Option<f64>) -> Vec<BoundEntry> {
    let mut entries = vec![upper_bound(model, g)];
    if let Some(gamma) = gamma_override {
        entries.push(upper_bound_pinned(model, g, gamma));
    }
    entries.extend(lower_bound_cube(model, g));
    entries.extend(exact_dim_cube(model, g));
    entries.extend(bounds_gasket(model, g));
    entries
}

fn consolidate(model: &FifModel, g: GammaReport, entries: Vec<BoundEntry>, empirical: Option<EmpiricalEstimate>) -> BoundsReport {
    let value = |kind: BoundKind| entries.iter().filter(move |e| e.kind == kind && e.usable()).filter_map(|e| e.conservative());
    let lower = value(BoundKind::Lower).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let upper = value(BoundKind::Upper).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    let exact = value(BoundKind::Exact).next();
    let mut flags = Vec::new();
    let (best_lower, best_upper) = match exact {
        Some(x) => {
            if lower.is_some_and(|l| l > x + 1e-9) || upper.is_some_and(|u| u < x - 1e-9) {
                flags.push(format!("exact value {x} lies outside other bounds [{lower:?}, {upper:?}]"));
            }
            (Some(x), Some(x))
        }
        None => (lower, upper),
    };
    if let (Some(l), Some(u)) = (best_lower, best_upper) {
        if l > u + 1e-12 {
            flags.push(format!("best lower {l} exceeds best upper {u}"));
        }
    }
    if let Some(est) = &empirical {
        let lo = best_lower.unwrap_or(model.geometry().dim_k) - RECONCILE_SLACK;
        let hi = best_upper.map_or(f64::INFINITY, |u| u + RECONCILE_SLACK);
        if est.slope < lo || est.slope > hi {
            flags.push(format!("INCONSISTENT: empirical slope {} outside [{lo}, {hi}]", est.slope));
        }
    }
    let witness = (0..=model.domain().dim())
        .filter_map(|r| find_witness(model, r))
        .fold(None, |best: Option<CollinearWitness>, w| match best {
            Some(b) if b.l.abs() >= w.l.abs() => Some(b),
            _ => Some(w),
        });
    BoundsReport {
        geometry: *model.geometry(),
        gammas: g,
        witness,
        entries,
        best_lower,
        best_upper,
        exact,
        empirical,
        flags,
    }
}

/// Every theoretical entry, without box counting.
pub fn bounds(model: &FifModel, gamma_override: Option<f64>) -> BoundsReport {
    let g = gammas(model);
    let mut entries = theory_entries(model, &g, gamma_override);
    entries.extend(lower_bound_interval_variable_s(model, &g, None));
    consolidate(model, g, entries, None)
}

/// Theory plus the box-counting slope, flagged when they disagree.
pub fn reconcile(model: &FifModel, opts: &ReconcileOptions) -> Result<BoundsReport, BoxError> {
    let (kmin, kmax) = resolve_window(model.n_maps(), opts.kmin, opts.kmax)?;
    let ladder = SampleLadder::build(model, kmax, opts.refine.unwrap_or(DEFAULT_REFINE), cell_budget()).map_err(BoxError::from)?;
    let est = empirical_from_ladder(model, &ladder, kmin, kmax)?;
    let g = gammas(model);
    let mut entries = theory_entries(model, &g, opts.gamma_override);
    entries.extend(lower_bound_interval_variable_s(model, &g, Some(&est.series)));
    Ok(consolidate(model, g, entries, Some(est)))
}

#[cfg(test)]
mod tests;
