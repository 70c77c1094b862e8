//! Theoretical bounds on the box dimension of the graph, each with the
//! hypotheses that admitted it.

use serde::Serialize;

use super::boxcount::BoxCountPoint;
use super::gamma::{Flavor, GammaReport};
use super::witness::{find_witness_where, CollinearWitness};
use crate::fif::FifModel;
use crate::ifs::Shape;
use crate::region::Bracket;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Hypothesis {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Hypothesis { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
    Exact,
}

/// One theorem applied to one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub theorem: String,
    /// Parameters of this instance such as axis and flavor.
    pub case: String,
    pub kind: BoundKind,
    pub hypotheses: Vec<Hypothesis>,
    /// All hypotheses hold and a value was produced.
    pub applies: bool,
    /// Value over the enclosures of the γ-type constants.
    pub value: Option<Bracket>,
    /// A lower bound that does not exceed `dim K`.
    pub vacuous: bool,
    /// Rests on a finite-level probe, not on checked hypotheses.
    pub heuristic: bool,
}

impl BoundEntry {
    fn new(theorem: &str, case: impl Into<String>, kind: BoundKind, hypotheses: Vec<Hypothesis>, value: Option<Bracket>, dim_k: f64) -> Self {
        let applies = value.is_some() && hypotheses.iter().all(|h| h.pass);
        let value = if applies { value } else { None };
        let vacuous = kind == BoundKind::Lower && value.is_some_and(|v| v.lo <= dim_k + 1e-12);
        BoundEntry { theorem: theorem.into(), case: case.into(), kind, hypotheses, applies, value, vacuous, heuristic: false }
    }

    /// The end that keeps the claim true: low for lower bounds, high for
    /// upper bounds and exact values.
    pub fn conservative(&self) -> Option<f64> {
        self.value.map(|v| if self.kind == BoundKind::Lower { v.lo } else { v.hi })
    }

    /// Counts toward the consolidated best values.
    pub fn usable(&self) -> bool {
        self.applies && !self.vacuous && !self.heuristic
    }
}

fn map_bracket(b: Bracket, f: impl Fn(f64) -> f64) -> Bracket {
    let (x, y) = (f(b.lo.max(f64::MIN_POSITIVE)), f(b.hi.max(f64::MIN_POSITIVE)));
    Bracket::new(x.min(y), x.max(y))
}

fn holder_hypothesis(g: &GammaReport) -> Hypothesis {
    let detail = match &g.eta_limited_by {
        Some(why) => format!("η = {} (declared {}; {why})", g.eta_used, g.eta_declared),
        None => format!("η = {} as declared", g.eta_used),
    };
    Hypothesis::new("s_i, q_i in the oscillation space of order η", true, detail)
}

/// Upper bound with the case split on `γ` against `N / Λ^{η′}`.
pub fn upper_bound(model: &FifModel, g: &GammaReport) -> BoundEntry {
    upper_bound_with(model, g, g.gamma, "upper", "audited γ", None)
}

/// Upper bound evaluated with a pinned `γ`, valid when it is at least the
/// audited one.
pub fn upper_bound_pinned(model: &FifModel, g: &GammaReport, gamma: f64) -> BoundEntry {
    let over = Hypothesis::new(
        "pinned γ is not below the audited γ",
        gamma >= g.gamma.hi,
        format!("pinned {gamma}, audited ≤ {}", g.gamma.hi),
    );
    upper_bound_with(model, g, Bracket::exact(gamma), "upper", "pinned γ", Some(over))
}

fn upper_bound_with(model: &FifModel, g: &GammaReport, gamma: Bracket, theorem: &str, case: &str, extra: Option<Hypothesis>) -> BoundEntry {
    let geo = model.geometry();
    let n = geo.n_maps as f64;
    let lambda = geo.lambda;
    let threshold = n / lambda.powf(g.eta_prime);
    let small = gamma.hi <= threshold;
    let mut hyps = vec![holder_hypothesis(g)];
    hyps.extend(extra);
    let (label, value) = if small {
        let v = 1.0 - g.eta_prime + n.ln() / lambda.ln();
        (format!("γ = {} ≤ N/Λ^η′ = {threshold}: 1 − η′ + log_Λ N", gamma.hi), Bracket::exact(v))
    } else {
        (
            format!("γ = {} > N/Λ^η′ = {threshold}: 1 + log_Λ γ", gamma.hi),
            map_bracket(gamma, |x| 1.0 + x.ln() / lambda.ln()),
        )
    };
    hyps.push(Hypothesis::new("case", true, label));
    BoundEntry::new(theorem, case, BoundKind::Upper, hyps, Some(value), geo.dim_k)
}

fn witness_hypothesis(model: &FifModel, r: usize, flavor: Flavor) -> (Hypothesis, Option<CollinearWitness>) {
    let w = find_witness_where(model, r, |l| flavor.admits(l));
    let sign = match flavor {
        Flavor::Affine => "",
        Flavor::Concave => " with L > 0",
        Flavor::Convex => " with L < 0",
    };
    let axis = if r == 0 { String::new() } else { format!(" along x{r}") };
    let h = match &w {
        Some(w) => Hypothesis::new(&format!("non-collinear triple{axis}{sign}"), true, w.to_string()),
        None => Hypothesis::new(&format!("non-collinear triple{axis}{sign}"), false, "none in V"),
    };
    (h, w)
}

fn case_label(r: usize, flavor: Flavor) -> String {
    format!("r={r}, flavor={}", flavor.index())
}

/// `1 + log_{Λ₀} γ_{j,r}` for interval and cube domains, one entry per axis
/// and flavor.
pub fn lower_bound_cube(model: &FifModel, g: &GammaReport) -> Vec<BoundEntry> {
    if model.domain().is_gasket() {
        return Vec::new();
    }
    let geo = model.geometry();
    let mut out = Vec::new();
    for r in 1..=model.domain().dim() {
        for flavor in Flavor::ALL {
            let (wh, _) = witness_hypothesis(model, r, flavor);
            let gj = g.value(flavor, r);
            let gh = Hypothesis::new(&format!("γ_{},{r} ≠ 0", flavor.index()), gj > 0.0, format!("γ_{},{r} = {gj}", flavor.index()));
            let value = (gj > 0.0).then(|| Bracket::exact(1.0 + gj.ln() / geo.lambda0.ln()));
            out.push(BoundEntry::new("cube_lower", case_label(r, flavor), BoundKind::Lower, vec![wh, gh], value, geo.dim_k));
        }
    }
    out
}

/// Shape condition shared by the exact-value theorems: some axis and flavor
/// with a matching witness and every `q_i` (and sign of `s_i`) compatible.
fn uniform_shape(model: &FifModel, axes: &[usize]) -> Hypothesis {
    let s = model.scale();
    let q = model.displacement();
    for &r in axes {
        for flavor in Flavor::ALL {
            let shapes = q.iter().all(|f| match flavor {
                Flavor::Affine => f.facts.is_affine(r),
                Flavor::Concave => f.facts.is_concave(r),
                Flavor::Convex => f.facts.is_convex(r),
            });
            let signs = flavor == Flavor::Affine || s.iter().all(|f| f.constant().is_some_and(|c| c >= 0.0));
            if !(shapes && signs) {
                continue;
            }
            if let Some(w) = find_witness_where(model, r, |l| flavor.admits(l)) {
                return Hypothesis::new("non-collinear data with uniform q shape", true, format!("{}: {w}", case_label(r, flavor)));
            }
        }
    }
    Hypothesis::new("non-collinear data with uniform q shape", false, "no axis and flavor with a matching witness")
}

fn constant_scales(model: &FifModel) -> Hypothesis {
    let bad: Vec<String> =
        model.scale().iter().enumerate().filter(|(_, f)| !f.is_constant()).map(|(i, _)| format!("s_{}", i + 1)).collect();
    let detail = if bad.is_empty() { "all constant".to_string() } else { format!("not constant: {}", bad.join(", ")) };
    Hypothesis::new("s_i constant", bad.is_empty(), detail)
}

/// Exact dimension on equally spaced grids with `n` pieces per axis.
pub fn exact_dim_cube(model: &FifModel, g: &GammaReport) -> Option<BoundEntry> {
    let axes = model.domain().axes()?;
    let geo = model.geometry();
    let m = axes.len();
    let n = axes[0].pieces();
    let grid_ok = axes.iter().all(|a| a.pieces() == n && a.equally_spaced());
    let mut hyps = vec![
        Hypothesis::new("n_u = n with equally spaced knots", grid_ok, format!("pieces {:?}", axes.iter().map(|a| a.pieces()).collect::<Vec<_>>())),
        constant_scales(model),
        holder_hypothesis(g),
        uniform_shape(model, &(1..=m).collect::<Vec<_>>()),
    ];
    let nf = n as f64;
    let gamma = g.gamma;
    let big = nf.powf(m as f64 - g.eta_prime);
    let value = if gamma.lo > big {
        hyps.push(Hypothesis::new("case", true, format!("γ = {} > n^(m−η′) = {big}: 1 + log γ / log n", gamma.lo)));
        Some(map_bracket(gamma, |x| 1.0 + x.ln() / nf.ln()))
    } else if gamma.hi <= nf.powi(m as i32 - 1) && g.eta_is_one() {
        hyps.push(Hypothesis::new("case", true, format!("γ = {} ≤ n^(m−1) with η′ = 1: m", gamma.hi)));
        Some(Bracket::exact(m as f64))
    } else {
        hyps.push(Hypothesis::new("case", false, format!("γ = {gamma:?} is in neither range (η′ = {})", g.eta_prime)));
        None
    };
    Some(BoundEntry::new("cube_exact", "", BoundKind::Exact, hyps, value, geo.dim_k))
}

/// Lower bounds and the exact value on the gasket over `V_n`.
pub fn bounds_gasket(model: &FifModel, g: &GammaReport) -> Vec<BoundEntry> {
    let Shape::Gasket { level, .. } = model.domain().shape() else {
        return Vec::new();
    };
    let geo = model.geometry();
    let ln_base = (2f64.powi(*level as i32)).ln();
    let mut out = Vec::new();
    let mut matching: Option<String> = None;
    for flavor in Flavor::ALL {
        let (wh, w) = witness_hypothesis(model, 0, flavor);
        let gj = g.value(flavor, 0);
        let gh = Hypothesis::new(&format!("γ_{},0 ≠ 0", flavor.index()), gj > 0.0, format!("γ_{},0 = {gj}", flavor.index()));
        let value = (gj > 0.0).then(|| Bracket::exact(1.0 + gj.ln() / ln_base));
        if w.is_some() && gj > 0.0 && gj >= g.gamma.hi * (1.0 - 1e-12) && matching.is_none() {
            matching = Some(format!("γ_{},0 = γ = {gj}", flavor.index()));
        }
        out.push(BoundEntry::new("gasket_lower", case_label(0, flavor), BoundKind::Lower, vec![wh, gh], value, geo.dim_k));
    }

    let mut hyps = vec![
        holder_hypothesis(g),
        Hypothesis::new(
            "γ_j,0 = γ for a flavor with a witness",
            matching.is_some(),
            matching.clone().unwrap_or_else(|| format!("γ = {:?}", g.gamma)),
        ),
    ];
    let gamma = g.gamma;
    let big = (3.0 / 2f64.powf(g.eta_prime)).powi(*level as i32);
    let value = if gamma.lo > big {
        hyps.push(Hypothesis::new("case", true, format!("γ = {} > (3/2^η′)^n = {big}: 1 + log γ / log 2^n", gamma.lo)));
        Some(map_bracket(gamma, |x| 1.0 + x.ln() / ln_base))
    } else if gamma.hi <= 1.5f64.powi(*level as i32) && g.eta_is_one() {
        hyps.push(Hypothesis::new("case", true, format!("γ = {} ≤ (3/2)^n with η′ = 1: log 3 / log 2", gamma.hi)));
        Some(Bracket::exact(3f64.ln() / 2f64.ln()))
    } else {
        hyps.push(Hypothesis::new("case", false, format!("γ = {gamma:?} is in neither range (η′ = {})", g.eta_prime)));
        None
    };
    out.push(BoundEntry::new("gasket_exact", format!("n={level}"), BoundKind::Exact, hyps, value, geo.dim_k));
    out
}

/// Lower bound `1 + log_N γ₀` for variable scales on an equally spaced
/// interval. The first entry uses the bounded-variation route; when that
/// fails and box counts are given, a second entry probes the growth of
/// `N(r) / (N^{2−η})^r` and is flagged heuristic.
pub fn lower_bound_interval_variable_s(model: &FifModel, g: &GammaReport, counts: Option<&[BoxCountPoint]>) -> Vec<BoundEntry> {
    let Shape::Interval(axis) = model.domain().shape() else {
        return Vec::new();
    };
    let geo = model.geometry();
    let n = geo.n_maps as f64;
    let spaced = Hypothesis::new("equally spaced knots", axis.equally_spaced(), format!("{:?}", axis.knots));
    let value = map_bracket(g.gamma0, |x| 1.0 + x.ln() / n.ln());
    let value = (g.gamma0.lo > 0.0).then_some(value);

    // Continuous BV: constants, Lipschitz maps, and concave or convex maps.
    let not_bv: Vec<String> = [("s", model.scale()), ("q", model.displacement())]
        .iter()
        .flat_map(|(role, fs)| {
            fs.iter().enumerate().filter_map(move |(i, f)| {
                let lipschitz = f.facts.holder.is_some_and(|h| h.exponent >= 1.0);
                let monotone_pieces = f.facts.is_concave(0) || f.facts.is_convex(0);
                (!(f.is_constant() || lipschitz || monotone_pieces)).then(|| format!("{role}_{}", i + 1))
            })
        })
        .collect();
    let bv = Hypothesis::new(
        "s_i, q_i of bounded variation",
        not_bv.is_empty(),
        if not_bv.is_empty() { "constant, Lipschitz, concave or convex".into() } else { format!("unknown: {}", not_bv.join(", ")) },
    );
    let mut route = None;
    for flavor in Flavor::ALL {
        let gj = g.value(flavor, 0);
        if gj <= 1.0 {
            continue;
        }
        if let Some(w) = find_witness_where(model, 0, |l| flavor.admits(l)) {
            route = Some(format!("γ_{},0 = {gj} > 1; {w}", flavor.index()));
            break;
        }
    }
    let wh = Hypothesis::new("witness with γ_j,0 > 1 for its flavor", route.is_some(), route.unwrap_or_else(|| "none".into()));
    let g0 = Hypothesis::new("γ₀ > 1", g.gamma0.lo > 1.0, format!("γ₀ ≥ {}", g.gamma0.lo));
    let first = BoundEntry::new("interval_variable_s", "bounded variation", BoundKind::Lower, vec![spaced.clone(), bv, wh, g0], value, geo.dim_k);
    let mut out = vec![first];
    if out[0].applies {
        return out;
    }

    let Some(counts) = counts else { return out };
    let eta = g.eta_used.min(1.0);
    let floor = n.powf(1.0 - eta);
    let g0 = Hypothesis::new("γ₀ > N^(1−η)", g.gamma0.lo > floor, format!("γ₀ ≥ {}, N^(1−η) = {floor}", g.gamma0.lo));
    let ratios: Vec<f64> = counts.iter().map(|p| p.count as f64 / n.powf((2.0 - eta) * p.k as f64)).collect();
    let growing = ratios.len() >= 2
        && ratios.windows(2).all(|w| w[1] > w[0])
        && ratios.last().unwrap() / ratios[0] >= 2.0;
    let probe = Hypothesis::new(
        "N(r)/(N^(2−η))^r grows over the window",
        growing,
        format!("ratios {:?}", ratios.iter().map(|r| format!("{r:.4e}")).collect::<Vec<_>>()),
    );
    let mut e = BoundEntry::new("interval_variable_s", "divergence probe", BoundKind::Lower, vec![spaced, holder_hypothesis(g), g0, probe], value, geo.dim_k);
    e.heuristic = true;
    out.push(e);
    out
}
