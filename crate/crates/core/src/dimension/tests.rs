use approx::assert_abs_diff_eq;

use super::*;
use crate::ifs::CellAddress;
use crate::testkit::*;

const THIRD: f64 = 1.0 / 3.0;

fn entry<'a>(r: &'a BoundsReport, theorem: &str, case: &str) -> &'a BoundEntry {
    r.entries.iter().find(|e| e.theorem == theorem && e.case == case).unwrap_or_else(|| panic!("{theorem} {case}"))
}

#[test]
fn gamma_classification() {
    let g = gammas(&case_one());
    assert!(g.gamma.contains(1.5) && g.gamma.width() < 1e-12);
    assert_abs_diff_eq!(g.value(Flavor::Concave, 1), 1.5, epsilon = 1e-15);
    assert_abs_diff_eq!(g.value(Flavor::Affine, 1), 0.75, epsilon = 1e-15);
    assert_eq!(g.value(Flavor::Convex, 1), 0.75);
    assert_abs_diff_eq!(g.eta_used, 0.8);

    let g = gammas(&sin_case(vec![0.0, 4.0 / 15.0, 0.6, 1.0]));
    assert_abs_diff_eq!(g.value(Flavor::Concave, 1), 1.25, epsilon = 1e-15);
    let audited = 1f64.sin() / 4.0 + 1.25;
    assert!(g.gamma.lo <= audited && audited <= g.gamma.hi && g.gamma.width() < 1e-4, "{:?}", g.gamma);
    assert!(g.gamma0.contains(1.25));
    let c = g.class(Flavor::Concave, 1).unwrap();
    assert_eq!(c.terms[0].value, 0.0);
    assert!(c.terms[0].reason.contains("not constant"));
}

#[test]
fn witnesses() {
    let m = case_one();
    let w = find_witness(&m, 1).unwrap();
    assert_eq!((w.y1.clone(), w.y2.clone(), w.y3.clone()), (vec![0.0], vec![1.0], vec![4.0 / 15.0]));
    assert_abs_diff_eq!(w.l, 0.5, epsilon = 1e-15);
    let w = CollinearWitness::from_points(&m, 1, &[0.0], &[0.6], &[4.0 / 15.0]).unwrap();
    assert_abs_diff_eq!(w.lambda, 4.0 / 9.0, epsilon = 1e-15);
    assert_abs_diff_eq!(w.l, 19.0 / 54.0, epsilon = 1e-15);
    assert!(CollinearWitness::from_points(&m, 1, &[0.0], &[4.0 / 15.0], &[0.6]).is_err());

    let m = case_two(["1/4", "1/2", "3/4"]);
    let w = CollinearWitness::from_points(&m, 1, &[0.0], &[2.0 / 3.0], &[THIRD]).unwrap();
    assert_abs_diff_eq!(w.lambda, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(w.l, THIRD, epsilon = 1e-15);

    let affine = solved_interval(vec![0.0, THIRD, 2.0 * THIRD, 1.0], |x| x, 0.2, 1.0);
    assert!(find_witness(&affine, 1).is_none() && find_witness(&affine, 0).is_none());
    assert!(find_witness_where(&case_one(), 1, |l| l < 0.0).is_none());
}

#[test]
fn example_one_bounds() {
    let r = bounds(&case_one(), None);
    let lower = 1.0 + 1.5f64.ln() / 3.75f64.ln();
    let upper = 1.0 + 1.5f64.ln() / 2.5f64.ln();
    assert_abs_diff_eq!(r.best_lower.unwrap(), lower, epsilon = 1e-12);
    assert_abs_diff_eq!(r.best_upper.unwrap(), upper, epsilon = 1e-12);
    assert_abs_diff_eq!(lower, 1.30676, epsilon = 1e-5);
    assert_abs_diff_eq!(upper, 1.44251, epsilon = 1e-5);
    assert!(r.exact.is_none() && r.flags.is_empty());
    assert!(entry(&r, "cube_lower", "r=1, flavor=1").vacuous);
    assert!(!entry(&r, "cube_lower", "r=1, flavor=3").applies);

    let r = bounds(&sin_case(vec![0.0, 4.0 / 15.0, 0.6, 1.0]), Some(1.5));
    assert_abs_diff_eq!(r.best_lower.unwrap(), 1.0 + 1.25f64.ln() / 3.75f64.ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(r.best_lower.unwrap(), 1.16882, epsilon = 1e-5);
    let audited = entry(&r, "upper", "audited γ").value.unwrap();
    let want = 1.0 + (1f64.sin() / 4.0 + 1.25).ln() / 2.5f64.ln();
    assert!(audited.lo - 1e-12 <= want && want <= audited.hi + 1e-12 && audited.hi - want < 1e-4);
    assert_abs_diff_eq!(audited.hi, 1.41328, epsilon = 1e-3);
    let pinned = entry(&r, "upper", "pinned γ");
    assert!(pinned.applies);
    assert_abs_diff_eq!(pinned.value.unwrap().hi, upper, epsilon = 1e-12);
    assert_eq!(r.best_upper, Some(audited.hi));
    assert!(!entry(&bounds(&case_one(), Some(1.4)), "upper", "pinned γ").applies);
}

#[test]
fn upper_bound_small_gamma_branch() {
    // η′ ≤ log_2.5 2 moves the threshold above γ.
    let mut spec = example_interval(vec![0.0, 4.0 / 15.0, 0.6, 1.0], ["1/4", "1/2", "3/4"]);
    spec.eta = 0.5;
    let m = crate::fif::FifModel::new(spec).unwrap();
    let e = upper_bound(&m, &gammas(&m));
    assert_abs_diff_eq!(e.value.unwrap().hi, 1.0 - 0.5 + 3f64.ln() / 2.5f64.ln(), epsilon = 1e-12);
}

#[test]
fn exact_values() {
    let r = bounds(&case_two(["1/4", "1/2", "3/4"]), None);
    let want = 1.0 + 1.5f64.ln() / 3f64.ln();
    assert_abs_diff_eq!(r.exact.unwrap(), want, epsilon = 1e-12);
    assert_abs_diff_eq!(want, 1.36907, epsilon = 1e-5);
    assert_eq!(r.best_lower, r.best_upper);

    let r = bounds(&gasket(0.8), None);
    assert_abs_diff_eq!(r.exact.unwrap(), 1.0 + 2.4f64.log2(), epsilon = 1e-12);
    assert_abs_diff_eq!(r.exact.unwrap(), 2.26303, epsilon = 1e-5);
    assert!(entry(&r, "gasket_lower", "r=0, flavor=1").applies);
    let r = bounds(&gasket(0.4), None);
    assert_abs_diff_eq!(r.exact.unwrap(), 3f64.ln() / 2f64.ln(), epsilon = 1e-15);

    let r = bounds(&cube(), None);
    assert_eq!(r.exact, Some(2.0));
    assert!(r.flags.is_empty(), "{:?}", r.flags);
}

#[test]
fn variable_scale_interval() {
    let r = bounds(&sin_case(vec![0.0, THIRD, 2.0 * THIRD, 1.0]), None);
    let e = entry(&r, "interval_variable_s", "bounded variation");
    assert!(e.applies, "{:?}", e.hypotheses);
    assert_abs_diff_eq!(e.value.unwrap().lo, 1.0 + 1.25f64.ln() / 3f64.ln(), epsilon = 1e-9);
    assert_abs_diff_eq!(e.value.unwrap().lo, 1.20311, epsilon = 1e-5);
    // Unequal knots: the theorem does not apply.
    let r = bounds(&case_one(), None);
    assert!(!entry(&r, "interval_variable_s", "bounded variation").applies);
}

#[test]
fn covering_lemma_case_two() {
    let m = case_two(["1/4", "1/2", "3/4"]);
    let w = CollinearWitness::from_points(&m, 1, &[0.0], &[2.0 / 3.0], &[THIRD]).unwrap();
    let empty = witness_height_check(&m, &CellAddress(vec![]), &w, Flavor::Concave).unwrap();
    assert_abs_diff_eq!(empty.height, THIRD, epsilon = 1e-15);
    let one = witness_height_check(&m, &CellAddress(vec![1]), &w, Flavor::Concave).unwrap();
    assert_abs_diff_eq!(one.required, THIRD / 2.0, epsilon = 1e-15);
    assert!(one.pass);
    for k in 0..=6 {
        for idx in 0..3usize.pow(k as u32) {
            let omega = CellAddress::from_index(idx, 3, k);
            let c = witness_height_check(&m, &omega, &w, Flavor::Concave).unwrap();
            assert!(c.pass, "{omega}: {c:?}");
        }
    }
    assert!(matches!(witness_height_check(&m, &CellAddress(vec![]), &w, Flavor::Convex), Err(WitnessError::Flavor { .. })));
}

#[test]
fn degenerate_zero_scales() {
    let m = solved_interval(vec![0.0, THIRD, 2.0 * THIRD, 1.0], |x| (3.0 * x).sin(), 0.0, 1.0);
    let r = bounds(&m, None);
    assert_abs_diff_eq!(entry(&r, "upper", "audited γ").value.unwrap().hi, 1.0, epsilon = 1e-12);
    assert!(!r.entries.iter().any(|e| e.kind == BoundKind::Lower && e.applies));
    assert_eq!(r.exact, Some(1.0));
}

#[test]
fn box_counts_of_simple_graphs() {
    let constant = solved_interval(vec![0.0, THIRD, 2.0 * THIRD, 1.0], |_| 2.0, 0.5, 1.0);
    let identity = solved_interval(vec![0.0, THIRD, 2.0 * THIRD, 1.0], |x| x, 0.0, 1.0);
    for k in 1..=6 {
        let cells = 3u64.pow(k as u32);
        let delta = 3f64.powi(-(k as i32));
        let s = crate::fif::graph_sample(&constant, k).unwrap();
        assert_eq!(box_count(&s, delta).unwrap(), cells);
        let s = crate::fif::graph_sample(&identity, k).unwrap();
        let n = box_count(&s, delta).unwrap();
        assert!((cells..=2 * cells).contains(&n), "{k}: {n}");
        assert!(box_count(&s, delta / 2.0).is_err());
        assert!(box_count(&s, 0.0).is_err());
    }
}

#[test]
fn voxel_counts_on_unequal_knots() {
    let m = case_one();
    let est = empirical_dimension(&m, 3, 7).unwrap();
    assert_eq!(est.method, CountMethod::Voxels);
    assert!(est.series.windows(2).all(|w| w[1].delta < w[0].delta && w[1].count >= w[0].count));
    let r = bounds(&m, None);
    assert!(est.slope > r.best_lower.unwrap() - 0.15 && est.slope < r.best_upper.unwrap() + 0.15, "{est:?}");
}

#[test]
fn fit_recovers_line() {
    let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
    let (s, c, r) = fit_line(&pts);
    assert_abs_diff_eq!(s, 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(c, 1.0, epsilon = 1e-14);
    assert!(r < 1e-14);
}

#[test]
fn reconcile_flags() {
    let m = case_two(["1/4", "1/2", "3/4"]);
    let r = reconcile(&m, &ReconcileOptions { kmin: Some(4), kmax: Some(8), gamma_override: None, refine: None }).unwrap();
    let est = r.empirical.as_ref().unwrap();
    assert!((est.slope - r.exact.unwrap()).abs() < 0.1, "{est:?}");
    assert!(!r.inconsistent());
    assert!(reconcile(&m, &ReconcileOptions { kmin: Some(1), kmax: Some(4), gamma_override: None, refine: None }).is_err());
}
