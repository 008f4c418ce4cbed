//! Thin dense linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    // Symmetrize first; assembly error would otherwise leak into the solver.
    let s = (m + m.transpose()) * 0.5;
    let se = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Indices whose columns are (numerically) linearly dependent: dominant
/// entries of the near-null eigenvectors.
fn dependent_columns(vals: &[f64], vecs: &DMatrix<f64>, cut: f64) -> Vec<usize> {
    let n = vals.len();
    let mut cols = Vec::new();
    for (j, &v) in vals.iter().enumerate() {
        if v <= cut {
            let mut best = 0usize;
            let mut mag = -1.0;
            for r in 0..n {
                let a = vecs[(r, j)].abs();
                if a > mag {
                    mag = a;
                    best = r;
                }
            }
            cols.push(best);
        }
    }
    cols.sort_unstable();
    cols.dedup();
    cols
}

/// Inverse square root of a symmetric positive definite matrix.
///
/// Fails when the spectrum collapses below `RANK_CUT` times the largest
/// eigenvalue, reporting the offending columns.
pub fn inv_sqrt_spd(m: &DMatrix<f64>, level: i32, labels: &[String]) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let max = vals.last().copied().unwrap_or(0.0);
    let cut = RANK_CUT * max.max(f64::MIN_POSITIVE);
    if vals.is_empty() || vals[0] <= cut {
        let cols = dependent_columns(&vals, &vecs, cut);
        return Err(Error::RankDeficient {
            level,
            columns: cols.into_iter().map(|i| labels[i].clone()).collect(),
        });
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| 1.0 / v.sqrt()),
    ));
    Ok(&vecs * d * vecs.transpose())
}

/// Solve an SPD system via the symmetric eigendecomposition.
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>, level: i32, labels: &[String]) -> Result<DVector<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let max = vals.last().copied().unwrap_or(0.0);
    let cut = RANK_CUT * max.max(f64::MIN_POSITIVE);
    if vals.is_empty() || vals[0] <= cut {
        let cols = dependent_columns(&vals, &vecs, cut);
        return Err(Error::RankDeficient {
            level,
            columns: cols.into_iter().map(|i| labels[i].clone()).collect(),
        });
    }
    let y = vecs.transpose() * rhs;
    let z = DVector::from_iterator(vals.len(), y.iter().zip(&vals).map(|(yi, vi)| yi / vi));
    Ok(&vecs * z)
}

/// Largest singular value.
pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

const RANK_CUT: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inv_sqrt_recovers_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let labels = vec!["a".into(), "b".into()];
        let r = inv_sqrt_spd(&m, 0, &labels).unwrap();
        let id = &r * &m * &r;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(id[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let labels = vec!["p0".to_string(), "p1".to_string()];
        match inv_sqrt_spd(&m, 3, &labels) {
            Err(Error::RankDeficient { level, columns }) => {
                assert_eq!(level, 3);
                assert!(!columns.is_empty());
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn sigma_max_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -7.0]);
        assert_abs_diff_eq!(sigma_max(&m), 7.0, epsilon = 1e-12);
    }
}
