use super::{Family, MapFunction, ModelError};
use crate::expr::{Expr, ShapeFacts};
use crate::ifs::{Domain, Shape};

/// Gaussian elimination with partial pivoting. `None` for a singular system.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Displacements of the given family interpolating the join-up targets
/// `q_i(k_j) = p(l_i(k_j)) - s_i(k_j) p(k_j)` on `V_0`.
pub(super) fn solve_q(
    domain: &Domain,
    s: &[MapFunction],
    v0_values: &[f64],
    lookup: &dyn Fn(&[f64]) -> f64,
    family: Family,
) -> Result<Vec<(Expr, ShapeFacts)>, ModelError> {
    let m = domain.dim();
    let fits = matches!(
        (domain.shape(), family),
        (Shape::Interval(_), Family::Affine | Family::Multilinear)
            | (Shape::Cube { .. }, Family::Multilinear)
            | (Shape::Gasket { .. }, Family::SgAffine)
    );
    if !fits {
        return Err(ModelError::FamilyMismatch { family });
    }
    let v0 = domain.v0();
    let mut out = Vec::with_capacity(domain.n_maps());
    for (i, l) in domain.maps().iter().enumerate() {
        let targets: Vec<f64> =
            v0.iter().zip(v0_values).map(|(k, p)| lookup(&l.apply(k)) - s[i].eval(k) * p).collect();
        let expr = match family {
            Family::SgAffine => {
                let a = v0.iter().map(|k| vec![1.0, k[0], k[1]]).collect();
                let c = solve_linear(a, targets).ok_or(ModelError::Singular(i + 1))?;
                Expr::affine(c[0], &c[1..])
            }
            Family::Affine | Family::Multilinear => {
                let masks: Vec<u32> = (0..1u32 << m).collect();
                let a = v0
                    .iter()
                    .map(|k| {
                        masks
                            .iter()
                            .map(|&j| (0..m).filter(|u| j & (1 << u) != 0).map(|u| k[u]).product())
                            .collect()
                    })
                    .collect();
                let c = solve_linear(a, targets).ok_or(ModelError::Singular(i + 1))?;
                Expr::multilinear(&masks.into_iter().zip(c).collect::<Vec<_>>())
            }
        };
        out.push((expr, ShapeFacts::default()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = solve_linear(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }
}
