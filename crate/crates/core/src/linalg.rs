//! Dense helpers shared by the linear methods and the metrics.
//!
//! Data matrices are `ndarray` row-major T×N arrays; eigen and singular value
//! decompositions are delegated to `nalgebra`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub fn to_dmatrix(a: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn column_means(a: ArrayView2<f64>) -> Array1<f64> {
    a.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(a.ncols()))
}

/// Population (ddof = 0) standard deviation of each column.
pub fn column_std(a: ArrayView2<f64>) -> Array1<f64> {
    let t = a.nrows().max(1) as f64;
    let mean = column_means(a);
    let mut var = Array1::<f64>::zeros(a.ncols());
    for row in a.rows() {
        for ((v, &x), &m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
            let d = x - m;
            *v += d * d;
        }
    }
    var.mapv(|v| (v / t).sqrt())
}

pub fn center(a: ArrayView2<f64>) -> Array2<f64> {
    let mean = column_means(a);
    &a - &mean.insert_axis(Axis(0))
}

/// Divides every column by its empirical standard deviation (no centering),
/// rejecting zero-variance columns by index.
pub fn scale_columns(a: &mut Array2<f64>, name: &str) -> Result<()> {
    let sd = column_std(a.view());
    for (j, &s) in sd.iter().enumerate() {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::ZeroVariance {
                matrix: name.to_string(),
                column: j,
            });
        }
    }
    for mut row in a.rows_mut() {
        row.zip_mut_with(&sd, |x, &s| *x /= s);
    }
    Ok(())
}

/// Centers and scales columns to unit variance. Columns with zero variance
/// are left at zero.
pub fn zscore(a: ArrayView2<f64>) -> Array2<f64> {
    let mut c = center(a);
    let sd = column_std(c.view());
    for mut row in c.rows_mut() {
        row.zip_mut_with(&sd, |x, &s| {
            if s > 0.0 {
                *x /= s
            } else {
                *x = 0.0
            }
        });
    }
    c
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending
/// with eigenvectors in the matching columns.
pub fn sym_eigen(a: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let eig = nalgebra::SymmetricEigen::new(to_dmatrix(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Inverse square root of a symmetric positive semi-definite matrix. Fails
/// when the smallest eigenvalue is below `rel_tol` times the largest.
pub fn inv_sqrt_spd(a: ArrayView2<f64>, rel_tol: f64) -> Option<Array2<f64>> {
    let (values, vectors) = sym_eigen(a);
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    if !(max > 0.0) || values.iter().any(|&v| v <= rel_tol * max) {
        return None;
    }
    let scaled = &vectors * &values.mapv(|v| 1.0 / v.sqrt()).insert_axis(Axis(0));
    Some(scaled.dot(&vectors.t()))
}

/// Thin SVD `a = U diag(s) Vᵀ` with singular values sorted descending.
pub fn svd(a: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let svd = nalgebra::SVD::new(to_dmatrix(a), true, true);
    let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = Array1::from_iter(order.iter().map(|&i| svd.singular_values[i]));
    let u = Array2::from_shape_fn((u.nrows(), k), |(r, c)| u[(r, order[c])]);
    let v = Array2::from_shape_fn((vt.ncols(), k), |(r, c)| vt[(order[c], r)]);
    (u, s, v)
}

pub fn singular_values(a: ArrayView2<f64>) -> Array1<f64> {
    let mut s: Vec<f64> = to_dmatrix(a).singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Array1::from(s)
}

/// Pearson cross-correlation matrix between the columns of `a` (T×p) and
/// `b` (T×q). Errors on zero-variance columns.
pub fn cross_correlation(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::shape(format!(
            "row counts differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let za = unit_columns(a, "z_x")?;
    let zb = unit_columns(b, "z_y")?;
    Ok(za.t().dot(&zb) / a.nrows() as f64)
}

fn unit_columns(a: ArrayView2<f64>, name: &str) -> Result<Array2<f64>> {
    let mut c = center(a);
    let sd = column_std(c.view());
    for (j, &s) in sd.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::ZeroVariance {
                matrix: name.to_string(),
                column: j,
            });
        }
    }
    for mut row in c.rows_mut() {
        row.zip_mut_with(&sd, |x, &s| *x /= s);
    }
    Ok(c)
}

pub fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&b) / (norm(a) * norm(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn inv_sqrt_squares_to_inverse() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let r = inv_sqrt_spd(a.view(), 1e-12).unwrap();
        let prod = r.dot(&a).dot(&r);
        for ((i, j), v) in prod.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((v - target).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_has_no_inverse_root() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(inv_sqrt_spd(a.view(), 1e-10).is_none());
    }

    #[test]
    fn svd_reconstructs() {
        let a = array![[3.0, 1.0, 0.5], [1.0, 2.0, -1.0]];
        let (u, s, v) = svd(a.view());
        let rec = (&u * &s.view().insert_axis(Axis(0))).dot(&v.t());
        for (x, y) in rec.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(s[0] >= s[1]);
    }

    #[test]
    fn scale_columns_reports_constant_column() {
        let mut a = array![[1.0, 2.0], [3.0, 2.0]];
        match scale_columns(&mut a, "x") {
            Err(Error::ZeroVariance { column, .. }) => assert_eq!(column, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
