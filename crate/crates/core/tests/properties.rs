use proptest::prelude::*;

use fif_core::dimension::{bounds, box_count_with, witness_height_check, BoundKind, CollinearWitness, CountBasis, Flavor};
use fif_core::expr::{range_bracket, Expr, ShapeFacts};
use fif_core::fif::{Displacement, Family, FifModel, FifSpec, SampleLadder};
use fif_core::ifs::{CellAddress, Domain};
use fif_core::{parse_expr, Bracket, Region};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![(-5.0f64..5.0).prop_map(Expr::constant), (1usize..=2).prop_map(Expr::var)]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            (inner, prop_oneof![Just(2.0), Just(0.5), Just(0.8), Just(3.0)]).prop_map(|(a, p)| Expr::pow(a, p)),
        ]
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Three equal pieces with data on the knots, constant scales and solved
/// affine displacements.
fn interval_model(knots: Vec<f64>, p: [f64; 4], s: [f64; 3]) -> FifModel {
    let domain = Domain::interval(knots.clone(), vec![false; 3]).unwrap();
    let data = knots.iter().zip(p).map(|(x, v)| (vec![*x], v)).collect();
    FifModel::new(FifSpec {
        domain,
        data,
        scale: s.iter().map(|c| (Expr::constant(*c), ShapeFacts::default())).collect(),
        displacement: Displacement::Solve(Family::Affine),
        eta: 1.0,
    })
    .unwrap()
}

fn knots() -> impl Strategy<Value = Vec<f64>> {
    (0.15f64..0.45, 0.15f64..0.45).prop_map(|(a, b)| vec![0.0, a, a + b, 1.0])
}

fn gasket(s: f64, mids: [f64; 3]) -> FifModel {
    let v = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
    let domain = Domain::gasket(v, 1).unwrap();
    let m = [[0.5, 0.0], [0.75, 3f64.sqrt() / 4.0], [0.25, 3f64.sqrt() / 4.0]];
    let mut data: Vec<(Vec<f64>, f64)> = v.iter().map(|p| (p.to_vec(), 0.0)).collect();
    data.extend(m.iter().zip(mids).map(|(p, z)| (p.to_vec(), z)));
    FifModel::new(FifSpec {
        domain,
        data,
        scale: vec![(Expr::constant(s), ShapeFacts::default()); 3],
        displacement: Displacement::Solve(Family::SgAffine),
        eta: 1.0,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn printing_parses_back(e in expr(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let text = e.to_string();
        let back = parse_expr(&text).unwrap();
        let (a, b) = (e.eval(&[x, y]), back.eval(&[x, y]));
        prop_assert!(a.is_nan() && b.is_nan() || close(a, b), "{text}: {a} vs {b}");
        prop_assert_eq!(back.to_string(), parse_expr(&back.to_string()).unwrap().to_string());
    }

    #[test]
    fn bracket_arithmetic_encloses(a in -3.0f64..3.0, w in 0.0f64..2.0, b in -3.0f64..3.0, v in 0.0f64..2.0, t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let (p, q) = (Bracket::new(a, a + w), Bracket::new(b, b + v));
        let (x, y) = (a + t * w, b + u * v);
        prop_assert!(p.add(&q).contains(x + y));
        let m = p.mul(&q);
        prop_assert!(m.lo <= x * y + 1e-12 && x * y <= m.hi + 1e-12);
        prop_assert!(p.hull(&q).contains(x) && p.hull(&q).contains(y));
    }

    #[test]
    fn range_brackets_shrink_on_subregions(c in 0.0f64..0.5, d in 0.1f64..0.5) {
        let e = parse_expr("x1^0.8/2 - x1^2/6").unwrap();
        let h = fif_core::Holder { exponent: 0.8, constant: 1.0 };
        let whole = range_bracket(&e, &Region::Box { lo: vec![0.0], hi: vec![1.0] }, 8, Some(&h)).unwrap();
        let part = range_bracket(&e, &Region::Box { lo: vec![c], hi: vec![c + d] }, 8, Some(&h)).unwrap();
        for i in 0..=20 {
            let x = c + d * i as f64 / 20.0;
            prop_assert!(part.contains(e.eval(&[x])));
        }
        prop_assert!(part.lo >= whole.lo - 1e-12 - whole.width() && part.hi <= whole.hi + whole.width());
    }

    #[test]
    fn cells_partition_and_compose(k in knots(), w1 in proptest::collection::vec(0usize..3, 0..4), w2 in proptest::collection::vec(0usize..3, 0..4), t in 0.0f64..1.0) {
        let d = Domain::interval(k, vec![false, true, false]).unwrap();
        for level in 1..=3 {
            let mut spans: Vec<(f64, f64)> = (0..3usize.pow(level)).map(|i| {
                let l = d.cell_map(&CellAddress::from_index(i, 3, level as usize));
                let (a, b) = (l.apply(&[0.0])[0], l.apply(&[1.0])[0]);
                (a.min(b), a.max(b))
            }).collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            prop_assert!(spans[0].0.abs() < 1e-12 && (spans[spans.len() - 1].1 - 1.0).abs() < 1e-12);
            prop_assert!(spans.windows(2).all(|p| (p[0].1 - p[1].0).abs() < 1e-12));
        }
        let joined = CellAddress(w1.iter().chain(&w2).copied().collect());
        let lhs = d.cell_map(&joined).apply(&[t]);
        let rhs = d.cell_map(&CellAddress(w1)).apply(&d.cell_map(&CellAddress(w2)).apply(&[t]));
        prop_assert!((lhs[0] - rhs[0]).abs() < 1e-12);
    }

    #[test]
    fn graph_is_self_similar(k in knots(), p in proptest::array::uniform4(-1.0f64..1.0), s in proptest::array::uniform3(-0.9f64..0.9), level in 1usize..5) {
        let m = interval_model(k, p, s);
        let coarse = m.evaluate_on_vk(level).unwrap().points_values(m.domain());
        let fine = m.evaluate_on_vk(level + 1).unwrap().points_values(m.domain());
        let mut images: Vec<(f64, f64)> = Vec::new();
        for (i, l) in m.domain().maps().iter().enumerate() {
            images.extend(coarse.iter().map(|(x, v)| (l.apply(x)[0], m.g(i, x, *v))));
        }
        images.sort_by(|a, b| a.0.total_cmp(&b.0));
        images.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
        prop_assert_eq!(images.len(), fine.len());
        for ((x, v), (y, w)) in images.iter().zip(&fine) {
            prop_assert!((x - y[0]).abs() < 1e-10 && (v - w).abs() < 1e-10);
        }
    }

    #[test]
    fn upper_bound_grows_with_scale(s in proptest::array::uniform3(0.05f64..0.6), f in 1.0f64..1.6) {
        let k = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let p = [0.0, 0.5, 1.0 / 3.0, 0.0];
        let a = bounds(&interval_model(k.clone(), p, s), None);
        let b = bounds(&interval_model(k, p, s.map(|c| c * f)), None);
        prop_assert!(a.gammas.gamma.hi <= b.gammas.gamma.hi + 1e-12);
        prop_assert!(a.best_upper.unwrap() <= b.best_upper.unwrap() + 1e-12);
        for r in [&a, &b] {
            if let Some(l) = r.best_lower {
                prop_assert!(l <= r.best_upper.unwrap() + 1e-12);
            }
            for e in r.entries.iter().filter(|e| e.kind == BoundKind::Lower && e.usable()) {
                prop_assert!(e.value.unwrap().lo <= r.best_upper.unwrap() + 1e-9, "{e:?}");
            }
        }
    }

    #[test]
    fn covering_heights_hold(s in proptest::array::uniform3(0.05f64..0.95), idx in 0usize..729) {
        let k = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let m = interval_model(k, [0.0, 0.5, 1.0 / 3.0, 0.0], s);
        let w = CollinearWitness::from_points(&m, 1, &[0.0], &[2.0 / 3.0], &[1.0 / 3.0]).unwrap();
        // Affine q turns the witness's flavor into the affine one.
        for level in 0..=6usize {
            let omega = CellAddress::from_index(idx % 3usize.pow(level as u32), 3, level);
            let c = witness_height_check(&m, &omega, &w, Flavor::Affine).unwrap();
            prop_assert!(c.pass, "{omega}: {c:?}");
        }
    }

    #[test]
    fn gasket_counts_are_sandwiched(s in 0.3f64..0.9, mids in proptest::array::uniform3(-1.0f64..1.0), k in 2usize..6) {
        let m = gasket(s, mids);
        let ladder = SampleLadder::build(&m, k, 2, 1 << 20).unwrap();
        let sample = ladder.level(k);
        let delta = sample.max_side();
        let cells = sample.cells.len() as u64;
        let sampled = box_count_with(sample, delta, CountBasis::Sampled).unwrap();
        let enclosed = box_count_with(sample, delta, CountBasis::Enclosure).unwrap();
        prop_assert!(cells <= sampled && sampled <= enclosed, "{cells} {sampled} {enclosed}");
    }
}
