use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::testkit::*;

#[test]
fn interpolates_data() {
    for model in [case_one(), gasket(0.8), cube()] {
        let t = model.evaluate_on_vk(1).unwrap();
        for (p, v) in t.points_values(model.domain()) {
            let want = model.data_at(&p).unwrap();
            assert!((v - want).abs() <= 1e-12, "{p:?}: {v} vs {want}");
        }
    }
}

#[test]
fn derived_constants() {
    let m = case_one();
    assert_eq!(m.s_norm().hi, 0.75);
    assert!((m.m_bound().lo - 2.0).abs() < 1e-12, "{:?}", m.m_bound());
    assert!(m.range().lo <= 0.0 && m.range().hi >= 0.5);
    assert!(m.join_up_residual() < 1e-15);
}

#[test]
fn point_evaluation_matches_tables() {
    for model in [case_one(), gasket(0.8), cube()] {
        let t = model.evaluate_on_vk(5).unwrap();
        for (p, v) in t.points_values(model.domain()).into_iter().step_by(7) {
            let e = model.evaluate_at(&p, 1e-12).unwrap();
            assert!((e - v).abs() < 1e-9, "{p:?}: {e} vs {v}");
        }
    }
}

#[test]
fn brackets_enclose_values_and_nest() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for model in [case_one(), gasket(0.4), cube()] {
        let ladder = SampleLadder::build(&model, 4, 3, 1 << 20).unwrap();
        let top = ladder.level(4);
        for _ in 0..300 {
            let idx = rng.gen_range(0..top.cells.len());
            let w = top.cell_address(idx);
            assert_eq!(top.cell_index(&w), idx);
            let l = model.domain().cell_map(&w);
            let local: Point = match model.domain().region() {
                Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect(),
                Region::Triangle(v) => {
                    let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
                    if a + b > 1.0 {
                        a = 1.0 - a;
                        b = 1.0 - b;
                    }
                    (0..2).map(|u| v[0][u] + a * (v[1][u] - v[0][u]) + b * (v[2][u] - v[0][u])).collect()
                }
            };
            let x = l.apply(&local);
            let Ok(f) = model.evaluate_at(&x, 1e-12) else { continue };
            let c = top.cells[idx];
            assert!(c.lo - 1e-9 <= f && f <= c.hi + 1e-9, "{x:?}: {f} outside {c:?}");
        }
        for k in 1..=4 {
            let fine = ladder.level(k);
            let coarse = ladder.level(k - 1);
            for (i, c) in fine.cells.iter().enumerate() {
                let mut w = fine.cell_address(i);
                w.0.pop();
                let p = coarse.cells[coarse.cell_index(&w)];
                assert!(p.lo <= c.lo && c.hi <= p.hi && p.vmin <= c.vmin && c.vmax <= p.vmax);
            }
        }
    }
}

#[test]
fn contraction_of_t() {
    let model = case_one();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = model.domain().clone();
    let endpoints = |p: &[f64]| p[0] == 0.0 || p[0] == 1.0;
    for _ in 0..10 {
        let f = VertexTable::from_fn(&d, 5, |p| if endpoints(p) { 0.0 } else { rng.gen_range(-2.0..2.0) });
        let g = VertexTable::from_fn(&d, 5, |p| if endpoints(p) { 0.0 } else { rng.gen_range(-2.0..2.0) });
        let tf = model.apply_t(&f).unwrap();
        let tg = model.apply_t(&g).unwrap();
        assert!(tf.max_abs_diff(&tg) <= 0.75 * f.max_abs_diff(&g) + 1e-12);
    }
}

#[test]
fn rejections() {
    let mut bad = example_interval(vec![0.0, 4.0 / 15.0, 0.6, 1.0], ["1/4", "1/2", "3/4"]);
    bad.data[1].1 = 0.4;
    assert!(matches!(FifModel::new(bad), Err(ModelError::JoinUp { map: 1, .. })));
    let big = example_interval(vec![0.0, 4.0 / 15.0, 0.6, 1.0], ["1/4", "1", "3/4"]);
    assert!(matches!(FifModel::new(big), Err(ModelError::NotContractive { map: 2, .. })));
    let mut missing = example_interval(vec![0.0, 4.0 / 15.0, 0.6, 1.0], ["1/4", "1/2", "3/4"]);
    missing.data.pop();
    assert!(matches!(FifModel::new(missing), Err(ModelError::MissingData(_))));
    let mut lying = example_interval(vec![0.0, 4.0 / 15.0, 0.6, 1.0], ["1/4", "1/2", "3/4"]);
    if let Displacement::Given(q) = &mut lying.displacement {
        q[0].1.convex_in.insert(1);
    }
    assert!(matches!(FifModel::new(lying), Err(ModelError::Shape { role: "q", map: 1, .. })));
    let cube_bad = Domain::cube(vec![(vec![0.0, 0.5, 1.0], vec![false, false]); 2]).unwrap();
    let data = cube_bad.nodes().into_iter().map(|p| (p, 0.0)).collect();
    let r = FifModel::new(FifSpec {
        domain: cube_bad,
        data,
        scale: vec![(Expr::constant(0.3), ShapeFacts::default()); 4],
        displacement: Displacement::Solve(Family::Multilinear),
        eta: 1.0,
    });
    assert!(matches!(r, Err(ModelError::NotWellDefined(_))));
}

#[test]
fn solved_displacements_hit_join_up() {
    let m = cube();
    let q: Vec<Expr> = m.displacement().iter().map(|f| f.expr.clone()).collect();
    assert!(m.join_up_residual_of(&q) < 1e-12);
    assert!(m.displacement().iter().all(|f| f.is_multilinear(2)));
    let g = gasket(0.8);
    assert!(g.displacement().iter().all(|f| f.facts.is_affine(0)));
}

fn random_point(model: &FifModel, rng: &mut ChaCha8Rng) -> Point {
    let d = model.domain();
    let w = crate::ifs::CellAddress((0..18).map(|_| rng.gen_range(0..d.n_maps())).collect());
    d.cell_map(&w).apply(&d.v0()[rng.gen_range(0..d.v0().len())])
}

#[test]
fn self_referential_equation_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let equal = FifModel::new(example_interval(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], ["1/4", "1/2", "3/4"])).unwrap();
    for model in [case_one(), equal, gasket(0.8), gasket(0.4), cube()] {
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let x = random_point(&model, &mut rng);
            let i = rng.gen_range(0..model.n_maps());
            let lx = model.domain().maps()[i].apply(&x);
            let lhs = model.evaluate_at(&lx, 1e-11).unwrap();
            let rhs = model.g(i, &x, model.evaluate_at(&x, 1e-11).unwrap());
            worst = worst.max((lhs - rhs).abs());
        }
        assert!(worst <= 1e-9, "residual {worst:e}");
    }
}

#[test]
fn depth_grows_slowly_with_tolerance() {
    let m = case_one();
    let step = (1.0 / (1.0 / m.s_norm().hi).log2()).ceil() as usize;
    for e in 3..12 {
        let t = 10f64.powi(-e);
        assert!(m.eval_depth(t / 2.0) <= m.eval_depth(t) + step);
    }
}

#[test]
fn hole_points_are_rejected() {
    let g = gasket(0.8);
    let c = [0.5, 3f64.sqrt() / 6.0];
    assert!(matches!(g.evaluate_at(&c, 1e-9), Err(EvalError::OutsideK(_))));
    assert!(matches!(case_one().evaluate_at(&[1.5], 1e-9), Err(EvalError::OutsideK(_))));
}

#[test]
fn uniform_points_are_conditioning_limited() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = case_one();
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let x = rng.gen_range(0.0..1.0);
        let i = rng.gen_range(0..3);
        let lx = m.domain().maps()[i].apply(&[x]);
        let r = m.evaluate_at(&lx, 1e-11).unwrap() - m.g(i, &[x], m.evaluate_at(&[x], 1e-11).unwrap());
        worst = worst.max(r.abs());
    }
    assert!(worst <= 1e-6, "{worst:e}");
}

#[test]
fn sampled_functions_match_tables() {
    for model in [gasket(0.8), case_one(), cube()] {
        for k in 0..=4 {
            let exact = model.evaluate_on_vk(k).unwrap();
            let sampled = VertexTable::from_fn(model.domain(), k, |p| model.evaluate_at(p, 1e-13).unwrap());
            assert!(exact.max_abs_diff(&sampled) < 1e-10, "k={k}: {}", exact.max_abs_diff(&sampled));
            let pushed = model.apply_t(&sampled).unwrap();
            assert!(pushed.max_abs_diff(&model.evaluate_on_vk(k + 1).unwrap()) < 1e-10);
        }
    }
}

#[test]
fn contraction_on_the_gasket() {
    let model = gasket(0.8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v0 = model.domain().v0().to_vec();
    let random_table = |rng: &mut ChaCha8Rng| {
        let mut seen: std::collections::HashMap<Vec<i64>, f64> = Default::default();
        VertexTable::from_fn(model.domain(), 4, |p| {
            if let Some(j) = v0.iter().position(|v| (v[0] - p[0]).abs() < 1e-12 && (v[1] - p[1]).abs() < 1e-12) {
                return model.v0_values()[j];
            }
            let key: Vec<i64> = p.iter().map(|x| (x * 1e9).round() as i64).collect();
            *seen.entry(key).or_insert_with(|| rng.gen_range(-2.0..2.0))
        })
    };
    for _ in 0..10 {
        let f = random_table(&mut rng);
        let g = random_table(&mut rng);
        let d = model.apply_t(&f).unwrap().max_abs_diff(&model.apply_t(&g).unwrap());
        assert!(d <= 0.8 * f.max_abs_diff(&g) + 1e-12);
    }
    // The exact recursion still rejects a table that is not f*.
    assert!(random_table(&mut rng).push(&model).is_err());
}
