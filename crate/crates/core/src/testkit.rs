//! Models shared by unit tests.

use crate::expr::{parse_expr, Expr, Holder, ShapeFacts};
use crate::fif::{Displacement, Family, FifModel, FifSpec};
use crate::ifs::Domain;
use crate::region::Point;

pub(crate) fn facts(holder: Option<(f64, f64)>, concave: bool) -> ShapeFacts {
    ShapeFacts {
        concave_in: if concave { [1].into_iter().collect() } else { Default::default() },
        holder: holder.map(|(exponent, constant)| Holder { exponent, constant }),
        ..Default::default()
    }
}

pub(crate) fn example_interval(knots: Vec<f64>, s: [&str; 3]) -> FifSpec {
    let data = vec![
        (vec![knots[0]], 0.0),
        (vec![knots[1]], 0.5),
        (vec![knots[2]], 1.0 / 3.0),
        (vec![knots[3]], 0.0),
    ];
    let scale = s.iter().map(|e| (parse_expr(e).unwrap(), ShapeFacts::default())).collect();
    let q = vec![
        (parse_expr("x1^0.8/2").unwrap(), facts(Some((0.8, 0.5)), true)),
        (parse_expr("-x1^2/6 + 1/2").unwrap(), facts(Some((1.0, 1.0 / 3.0)), true)),
        (parse_expr("-x1/3 + 1/3").unwrap(), ShapeFacts::default()),
    ];
    FifSpec {
        domain: Domain::interval(knots, vec![false; 3]).unwrap(),
        data,
        scale,
        displacement: Displacement::Given(q),
        eta: 0.8,
    }
}

pub(crate) fn case_one() -> FifModel {
    FifModel::new(example_interval(vec![0.0, 4.0 / 15.0, 0.6, 1.0], ["1/4", "1/2", "3/4"])).unwrap()
}

pub(crate) fn gasket(s: f64) -> FifModel {
    let v = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
    let domain = Domain::gasket(v, 1).unwrap();
    let mids = [([0.5, 0.0], 1.0), ([0.75, 3f64.sqrt() / 4.0], 0.5), ([0.25, 3f64.sqrt() / 4.0], -0.5)];
    let mut data: Vec<(Point, f64)> = v.iter().map(|p| (p.to_vec(), 0.0)).collect();
    data.extend(mids.iter().map(|(p, z)| (p.to_vec(), *z)));
    FifModel::new(FifSpec {
        domain,
        data,
        scale: vec![(Expr::constant(s), ShapeFacts::default()); 3],
        displacement: Displacement::Solve(Family::SgAffine),
        eta: 1.0,
    })
    .unwrap()
}

pub(crate) fn cube() -> FifModel {
    let domain = Domain::cube(vec![(vec![0.0, 0.5, 1.0], vec![false, true]); 2]).unwrap();
    let data = domain.nodes().into_iter().map(|p| { let v = (p[0] * 3.0).sin() + p[1] * p[0]; (p, v) }).collect();
    FifModel::new(FifSpec {
        domain,
        data,
        scale: vec![(Expr::constant(0.3), ShapeFacts::default()); 4],
        displacement: Displacement::Solve(Family::Multilinear),
        eta: 1.0,
    })
    .unwrap()
}

/// Equally spaced three-piece interval with scales `s` and the example's
/// displacements.
pub(crate) fn case_two(s: [&str; 3]) -> FifModel {
    FifModel::new(example_interval(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], s)).unwrap()
}

/// Three-piece interval with data `p` on the knots, `s ≡ c`, solved affine `q`.
pub(crate) fn solved_interval(knots: Vec<f64>, p: impl Fn(f64) -> f64, c: f64, eta: f64) -> FifModel {
    let domain = Domain::interval(knots, vec![false; 3]).unwrap();
    let data = domain.nodes().into_iter().map(|v| { let y = p(v[0]); (v, y) }).collect();
    FifModel::new(FifSpec {
        domain,
        data,
        scale: vec![(Expr::constant(c), ShapeFacts::default()); 3],
        displacement: Displacement::Solve(Family::Affine),
        eta,
    })
    .unwrap()
}

/// The example with `s_1 = sin(x)/4` on the given knots.
pub(crate) fn sin_case(knots: Vec<f64>) -> FifModel {
    let mut spec = example_interval(knots, ["sin(x1)/4", "1/2", "3/4"]);
    spec.scale[0].1 = facts(Some((1.0, 0.25)), false);
    FifModel::new(spec).unwrap()
}
