//! Linear dimensionality reduction: PCA, PLS, CCA and regularized CCA.
//!
//! PLS, CCA and rCCA share one formulation. With B = (1 − c)·C + c·I for each
//! view, the paired directions are the singular vectors of
//! `B_X^{-1/2} C_XY B_Y^{-1/2}` mapped back through `B^{-1/2}`. c = 1 gives
//! PLS, c = 0 gives CCA, and intermediate values interpolate. Directions are
//! extracted one at a time by power iteration followed by deflation.
//!
//! Inputs are expected to be standardized already. Fits center the columns
//! and divide by one global scale (the root mean square entry), which keeps
//! the relative column scales but makes every method, including the ridge
//! term of rCCA, invariant to rescaling a whole matrix.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{center, inv_sqrt_spd, norm, svd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Pls,
    Cca,
    Rcca,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Method::Pca),
            "pls" => Ok(Method::Pls),
            "cca" => Ok(Method::Cca),
            "rcca" => Ok(Method::Rcca),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Pca => "pca",
            Method::Pls => "pls",
            Method::Cca => "cca",
            Method::Rcca => "rcca",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RccaConfig {
    pub c_x: f64,
    pub c_y: f64,
    /// Stop when the direction moves less than this between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RccaConfig {
    fn default() -> Self {
        RccaConfig {
            c_x: 0.1,
            c_y: 0.1,
            tolerance: 1e-4,
            max_iterations: 5000,
        }
    }
}

impl RccaConfig {
    pub fn with_c(c: f64) -> Self {
        RccaConfig {
            c_x: c,
            c_y: c,
            ..Default::default()
        }
    }
}

/// PCA needs accurate eigenvectors rather than a loose stopping rule, so it
/// iterates to a much tighter tolerance and reports rather than fails on
/// non-convergence.
pub const PCA_TOLERANCE: f64 = 1e-10;
pub const PCA_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub final_delta: Vec<f64>,
}

/// Learned directions for one method. Columns are unit vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBasis {
    pub method: Method,
    pub w_x: Array2<f64>,
    pub w_y: Option<Array2<f64>>,
    /// Eigenvalues (PCA), covariances (PLS), correlations (CCA) or the
    /// regularized criterion (rCCA), sorted non-increasing.
    pub criterion: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl ProjectionBasis {
    pub fn k(&self) -> usize {
        self.w_x.ncols()
    }
}

/// Centered copy divided by its root mean square entry.
fn prepare(a: ArrayView2<f64>) -> Array2<f64> {
    let mut c = center(a);
    let rms = (c.iter().map(|v| v * v).sum::<f64>() / c.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        c /= rms;
    }
    c
}

fn covariance(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    a.t().dot(&b) / a.nrows() as f64
}

fn check_k(k: usize, limits: &[(usize, &str)]) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    for &(limit, what) in limits {
        if k > limit {
            return Err(Error::domain(format!("k = {k} exceeds {what} = {limit}")));
        }
    }
    Ok(())
}

fn check_rows(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::shape(format!("x has {} rows, y has {}", x.nrows(), y.nrows())));
    }
    if x.nrows() < 2 {
        return Err(Error::domain("at least two samples are needed"));
    }
    Ok(())
}

/// Flips signs so that the largest-magnitude coordinate of `a` is positive,
/// applying the same flip to the paired vector.
fn fix_sign(a: &mut Array1<f64>, b: Option<&mut Array1<f64>>) {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &v in a.iter() {
        if v.abs() > best {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        a.mapv_inplace(|v| -v);
        if let Some(b) = b {
            b.mapv_inplace(|v| -v);
        }
    }
}

fn orthogonalize(v: &mut Array1<f64>, basis: &[Array1<f64>]) {
    for b in basis {
        let p = v.dot(b);
        v.scaled_add(-p, b);
    }
}

/// Unit vector orthogonal to `basis`, used when the residual matrix is zero.
fn fresh_direction(n: usize, basis: &[Array1<f64>]) -> Array1<f64> {
    for i in 0..n {
        let mut e = Array1::zeros(n);
        e[i] = 1.0;
        orthogonalize(&mut e, basis);
        orthogonalize(&mut e, basis);
        let len = norm(e.view());
        if len > 1e-6 {
            return e / len;
        }
    }
    Array1::zeros(n)
}

struct PowerResult {
    u: Vec<Array1<f64>>,
    v: Vec<Array1<f64>>,
    s: Vec<f64>,
    diagnostics: Diagnostics,
    #[cfg_attr(not(test), allow(dead_code))]
    residual: Array2<f64>,
}

/// Leading `k` singular triplets of `m` by power iteration with deflation.
/// Each iteration is re-orthogonalized against earlier directions. When
/// `strict` is set, non-convergence is an error.
fn power_svd(mut m: Array2<f64>, k: usize, tol: f64, max_iter: usize, strict: bool) -> Result<PowerResult> {
    let (rows, cols) = m.dim();
    let mut us: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut vs: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut ss = Vec::with_capacity(k);
    let mut diag = Diagnostics::default();
    for direction in 0..k {
        let start = m.columns().into_iter().find(|c| norm(*c) > 0.0).map(|c| c.to_owned());
        let mut u = match start {
            Some(mut c) => {
                orthogonalize(&mut c, &us);
                let len = norm(c.view());
                if len > 0.0 {
                    c / len
                } else {
                    fresh_direction(rows, &us)
                }
            }
            None => fresh_direction(rows, &us),
        };
        let mut v = Array1::zeros(cols);
        let mut s = 0.0;
        let mut converged = false;
        let mut iterations = 0;
        let mut delta = f64::INFINITY;
        while iterations < max_iter {
            iterations += 1;
            v = m.t().dot(&u);
            orthogonalize(&mut v, &vs);
            let vn = norm(v.view());
            if vn == 0.0 {
                v = fresh_direction(cols, &vs);
                s = 0.0;
                converged = true;
                delta = 0.0;
                break;
            }
            v /= vn;
            let mut un = m.dot(&v);
            orthogonalize(&mut un, &us);
            s = norm(un.view());
            if s == 0.0 {
                converged = true;
                delta = 0.0;
                break;
            }
            un /= s;
            delta = norm((&un - &u).view());
            u = un;
            if delta < tol {
                converged = true;
                break;
            }
        }
        if !converged && strict {
            return Err(Error::Convergence { iterations, direction });
        }
        // Final v consistent with the returned u.
        if s > 0.0 {
            let mut vv = m.t().dot(&u);
            orthogonalize(&mut vv, &vs);
            let len = norm(vv.view());
            if len > 0.0 {
                v = vv / len;
            }
            s = u.dot(&m.dot(&v));
        }
        let uc = u.view().insert_axis(Axis(1));
        let vr = v.view().insert_axis(Axis(0));
        m = m - s * uc.dot(&vr);
        diag.iterations.push(iterations);
        diag.converged.push(converged);
        diag.final_delta.push(delta);
        us.push(u);
        vs.push(v);
        ss.push(s);
    }
    Ok(PowerResult {
        u: us,
        v: vs,
        s: ss,
        diagnostics: diag,
        residual: m,
    })
}

fn stack(cols: &[Array1<f64>], n: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).assign(c);
    }
    out
}

/// Top-`k` principal directions of the standardized data.
pub fn pca_fit(x: ArrayView2<f64>, k: usize) -> Result<ProjectionBasis> {
    check_k(k, &[(x.nrows(), "T"), (x.ncols(), "N_X")])?;
    let xs = prepare(x);
    let c = covariance(xs.view(), xs.view());
    let n = c.nrows();
    let res = power_svd(c, k, PCA_TOLERANCE, PCA_MAX_ITERATIONS, false)?;
    let mut cols = res.u;
    for c in &mut cols {
        fix_sign(c, None);
    }
    Ok(ProjectionBasis {
        method: Method::Pca,
        w_x: stack(&cols, n),
        w_y: None,
        criterion: res.s,
        diagnostics: res.diagnostics,
    })
}

fn regularized_inv_sqrt(c: &Array2<f64>, reg: f64, what: &'static str, samples: usize) -> Result<Array2<f64>> {
    let n = c.nrows();
    if reg >= 1.0 {
        return Ok(Array2::eye(n));
    }
    let b = c * (1.0 - reg) + &(Array2::<f64>::eye(n) * reg);
    inv_sqrt_spd(b.view(), 1e-10).ok_or(Error::Undersampled {
        what,
        samples,
        dims: n,
    })
}

/// Regularized CCA. `c_x = c_y = 1` is PLS and `c_x = c_y = 0` is CCA.
pub fn rcca_fit(x: ArrayView2<f64>, y: ArrayView2<f64>, k: usize, cfg: &RccaConfig) -> Result<ProjectionBasis> {
    fit_generalized(x, y, k, cfg, Method::Rcca)
}

/// PLS in canonical mode: successive singular pairs of the cross-covariance.
pub fn pls_fit(x: ArrayView2<f64>, y: ArrayView2<f64>, k: usize, cfg: &RccaConfig) -> Result<ProjectionBasis> {
    let cfg = RccaConfig {
        c_x: 1.0,
        c_y: 1.0,
        ..cfg.clone()
    };
    fit_generalized(x, y, k, &cfg, Method::Pls)
}

fn fit_generalized(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    k: usize,
    cfg: &RccaConfig,
    method: Method,
) -> Result<ProjectionBasis> {
    check_rows(x, y)?;
    for c in [cfg.c_x, cfg.c_y] {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::domain(format!("regularization {c} outside [0, 1]")));
        }
    }
    let mut limits = vec![(x.ncols(), "N_X"), (y.ncols(), "N_Y")];
    if method == Method::Pls {
        limits.push((x.nrows(), "T"));
    }
    check_k(k, &limits)?;
    let t = x.nrows();
    let xs = prepare(x);
    let ys = prepare(y);
    let cxy = covariance(xs.view(), ys.view());
    let rx = regularized_inv_sqrt(&covariance(xs.view(), xs.view()), cfg.c_x, "C_XX", t)?;
    let ry = regularized_inv_sqrt(&covariance(ys.view(), ys.view()), cfg.c_y, "C_YY", t)?;
    let m = rx.dot(&cxy).dot(&ry);
    let res = power_svd(m, k, cfg.tolerance, cfg.max_iterations, true)?;
    let mut wx = Vec::with_capacity(k);
    let mut wy = Vec::with_capacity(k);
    for (u, v) in res.u.iter().zip(&res.v) {
        let mut a = rx.dot(u);
        let mut b = ry.dot(v);
        let (na, nb) = (norm(a.view()), norm(b.view()));
        if na > 0.0 {
            a /= na;
        }
        if nb > 0.0 {
            b /= nb;
        }
        fix_sign(&mut a, Some(&mut b));
        wx.push(a);
        wy.push(b);
    }
    Ok(ProjectionBasis {
        method,
        w_x: stack(&wx, x.ncols()),
        w_y: Some(stack(&wy, y.ncols())),
        criterion: res.s,
        diagnostics: res.diagnostics,
    })
}

/// Classical CCA through a dense SVD. Refuses singular covariance blocks,
/// which always occur when T ≤ N.
pub fn cca_fit(x: ArrayView2<f64>, y: ArrayView2<f64>, k: usize) -> Result<ProjectionBasis> {
    check_rows(x, y)?;
    check_k(k, &[(x.ncols(), "N_X"), (y.ncols(), "N_Y")])?;
    let t = x.nrows();
    for (what, n) in [("C_XX", x.ncols()), ("C_YY", y.ncols())] {
        if t <= n {
            return Err(Error::Undersampled { what, samples: t, dims: n });
        }
    }
    let xs = prepare(x);
    let ys = prepare(y);
    let rx = regularized_inv_sqrt(&covariance(xs.view(), xs.view()), 0.0, "C_XX", t)?;
    let ry = regularized_inv_sqrt(&covariance(ys.view(), ys.view()), 0.0, "C_YY", t)?;
    let m = rx.dot(&covariance(xs.view(), ys.view())).dot(&ry);
    let (u, s, v) = svd(m.view());
    let mut wx = Vec::with_capacity(k);
    let mut wy = Vec::with_capacity(k);
    for j in 0..k {
        let mut a = rx.dot(&u.column(j));
        let mut b = ry.dot(&v.column(j));
        let (na, nb) = (norm(a.view()), norm(b.view()));
        a /= na;
        b /= nb;
        fix_sign(&mut a, Some(&mut b));
        wx.push(a);
        wy.push(b);
    }
    Ok(ProjectionBasis {
        method: Method::Cca,
        w_x: stack(&wx, x.ncols()),
        w_y: Some(stack(&wy, y.ncols())),
        criterion: s.iter().take(k).map(|c| c.clamp(0.0, 1.0)).collect(),
        diagnostics: Diagnostics::default(),
    })
}

/// Dispatches on `method`. PCA fits each view separately.
pub fn fit(method: Method, x: ArrayView2<f64>, y: ArrayView2<f64>, k: usize, cfg: &RccaConfig) -> Result<ProjectionBasis> {
    match method {
        Method::Pca => {
            let bx = pca_fit(x, k)?;
            let by = pca_fit(y, k)?;
            Ok(ProjectionBasis {
                w_y: Some(by.w_x),
                ..bx
            })
        }
        Method::Pls => pls_fit(x, y, k, cfg),
        Method::Cca => cca_fit(x, y, k),
        Method::Rcca => rcca_fit(x, y, k, cfg),
    }
}

fn project_one(w: &Array2<f64>, x: ArrayView2<f64>, what: &str) -> Result<Array2<f64>> {
    if x.ncols() != w.nrows() {
        return Err(Error::shape(format!(
            "{what} has {} columns, basis expects {}",
            x.ncols(),
            w.nrows()
        )));
    }
    Ok(x.dot(w))
}

/// Z_X = X·W_X and, when given, Z_Y = Y·W_Y.
pub fn project(
    basis: &ProjectionBasis,
    x: ArrayView2<f64>,
    y: Option<ArrayView2<f64>>,
) -> Result<(Array2<f64>, Option<Array2<f64>>)> {
    let zx = project_one(&basis.w_x, x, "x")?;
    let zy = match (y, &basis.w_y) {
        (Some(y), Some(w)) => Some(project_one(w, y, "y")?),
        (Some(_), None) => return Err(Error::shape("basis has no y directions")),
        (None, _) => None,
    };
    Ok((zx, zy))
}

/// |cos| between two directions.
pub fn abs_cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    crate::linalg::cosine(a, b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_linear_model, LinearModelSpec};
    use crate::linalg::sym_eigen;
    use crate::rng::{rng_from_seed, standard_normal_matrix};
    use proptest::prelude::*;

    fn noise(seed: u64, t: usize, n: usize) -> Array2<f64> {
        standard_normal_matrix(&mut rng_from_seed(seed), t, n)
    }

    #[test]
    fn pca_finds_dominant_axis() {
        let mut x = noise(1, 500, 2);
        for t in 0..500 {
            x[[t, 0]] = t as f64;
            x[[t, 1]] *= 0.01;
        }
        let b = pca_fit(x.view(), 1).unwrap();
        assert!(b.w_x[[0, 0]] >= 0.999);
    }

    #[test]
    fn pca_matches_dense_eigendecomposition() {
        let x = noise(2, 50, 8);
        let b = pca_fit(x.view(), 8).unwrap();
        let xs = prepare(x.view());
        let (vals, vecs) = sym_eigen((xs.t().dot(&xs) / 50.0).view());
        for j in 0..8 {
            assert!(abs_cosine(b.w_x.column(j), vecs.column(j)) > 1.0 - 1e-6, "direction {j}");
            assert!((b.criterion[j] - vals[j]).abs() < 1e-8);
        }
        let gram = b.w_x.t().dot(&b.w_x);
        for ((i, j), v) in gram.indexed_iter() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
        // Training scores equal projections on the oracle eigenvectors.
        let (z, _) = project(&b, xs.view(), None).unwrap();
        let oracle = xs.dot(&vecs.column(0));
        let c = crate::linalg::cosine(z.column(0), oracle.view()).abs();
        assert!(c > 1.0 - 1e-6);
    }

    #[test]
    fn pca_sign_and_order_are_deterministic() {
        let x = noise(3, 200, 6);
        let a = pca_fit(x.view(), 3).unwrap();
        assert_eq!(a, pca_fit(x.view(), 3).unwrap());
        assert!(a.criterion.windows(2).all(|w| w[0] >= w[1]));
        for c in a.w_x.columns() {
            let max = c.iter().cloned().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(max > 0.0);
        }
    }

    #[test]
    fn k_too_large_is_a_domain_error() {
        let x = noise(4, 10, 3);
        assert!(matches!(pca_fit(x.view(), 4), Err(Error::Domain(_))));
        assert!(matches!(pca_fit(x.view(), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn pls_on_identical_views_is_pca() {
        let x = noise(5, 300, 6);
        let pls = pls_fit(x.view(), x.view(), 1, &RccaConfig::default()).unwrap();
        let pca = pca_fit(x.view(), 1).unwrap();
        assert!(abs_cosine(pls.w_x.column(0), pca.w_x.column(0)) > 1.0 - 1e-6);
        assert!((pls.criterion[0] - pca.criterion[0]).abs() < 1e-6);
    }

    #[test]
    fn pls_directions_are_orthonormal() {
        let spec = LinearModelSpec::from_snr(20, 400, 3, 2, 1.0, 2.0, 1, 2);
        let d = generate_linear_model(&spec).unwrap();
        let b = pls_fit(d.x.view(), d.y.view(), 4, &RccaConfig::default()).unwrap();
        for w in [&b.w_x, b.w_y.as_ref().unwrap()] {
            let g = w.t().dot(w);
            for ((i, j), v) in g.indexed_iter() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-6);
            }
        }
        assert!(b.criterion.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    }

    #[test]
    fn pls_non_convergence_carries_iterations() {
        let spec = LinearModelSpec::from_snr(20, 400, 3, 2, 1.0, 2.0, 1, 2);
        let d = generate_linear_model(&spec).unwrap();
        let cfg = RccaConfig {
            tolerance: 1e-300,
            max_iterations: 7,
            ..Default::default()
        };
        match pls_fit(d.x.view(), d.y.view(), 1, &cfg) {
            Err(Error::Convergence { iterations, direction }) => {
                assert_eq!(iterations, 7);
                assert_eq!(direction, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pls_signal_beats_null() {
        let strong = generate_linear_model(&LinearModelSpec::from_snr(30, 500, 1, 0, 0.0, 5.0, 1, 2)).unwrap();
        let s = pls_fit(strong.x.view(), strong.y.view(), 1, &RccaConfig::default()).unwrap().criterion[0];
        let null = generate_linear_model(&LinearModelSpec::from_snr(30, 500, 0, 0, 0.0, 0.0, 1, 2)).unwrap();
        let mut rng = rng_from_seed(9);
        let mut max_null = 0.0_f64;
        for _ in 0..20 {
            let perm = crate::rng::permutation(&mut rng, 500);
            let y = null.y.select(Axis(0), &perm);
            let c = pls_fit(null.x.view(), y.view(), 1, &RccaConfig::default()).unwrap().criterion[0];
            max_null = max_null.max(c);
        }
        assert!(s > 2.0 * max_null, "signal {s} vs null {max_null}");
    }

    #[test]
    fn pls_recovers_planted_direction() {
        let spec = LinearModelSpec::from_snr(200, 3000, 1, 0, 0.0, 5.0, 3, 4);
        let d = generate_linear_model(&spec).unwrap();
        let model = crate::datagen::LinearModel::new(spec.clone()).unwrap();
        let b = pls_fit(d.x.view(), d.y.view(), 1, &RccaConfig::default()).unwrap();
        // Standardization divides column j by sqrt(σ²_R + σ²_P q_j²).
        let q = model.q_x.row(0).mapv(|q| q / (spec.sigma2_r_x + spec.sigma2_p * q * q).sqrt());
        assert!(abs_cosine(b.w_x.column(0), q.view()) >= 0.95);
    }

    #[test]
    fn cca_identical_views_correlate_perfectly() {
        let x = noise(6, 200, 4);
        let b = cca_fit(x.view(), x.view(), 4).unwrap();
        for c in &b.criterion {
            assert!((c - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn cca_null_scale() {
        let (n, t) = (10, 100);
        let x = noise(7, t, n);
        let y = noise(8, t, n);
        let c = cca_fit(x.view(), y.view(), 1).unwrap().criterion[0];
        let mut rng = rng_from_seed(10);
        let mut null = Vec::new();
        for _ in 0..20 {
            let perm = crate::rng::permutation(&mut rng, t);
            let yp = y.select(Axis(0), &perm);
            null.push(cca_fit(x.view(), yp.view(), 1).unwrap().criterion[0]);
        }
        let mean = null.iter().sum::<f64>() / null.len() as f64;
        let scale = (n as f64 / t as f64).sqrt();
        assert!(c < 0.99 && c > 0.2 * scale);
        assert!((c - mean).abs() < 2.0 * scale, "{c} vs null mean {mean}");
    }

    #[test]
    fn cca_refuses_undersampled() {
        let x = noise(9, 20, 30);
        assert!(matches!(cca_fit(x.view(), x.view(), 1), Err(Error::Undersampled { .. })));
        let cfg = RccaConfig::with_c(0.0);
        assert!(matches!(rcca_fit(x.view(), x.view(), 1, &cfg), Err(Error::Undersampled { .. })));
        assert!(rcca_fit(x.view(), x.view(), 1, &RccaConfig::with_c(0.1)).is_ok());
    }

    #[test]
    fn rcca_endpoints() {
        let spec = LinearModelSpec::from_snr(15, 2000, 2, 1, 1.0, 3.0, 1, 2);
        let d = generate_linear_model(&spec).unwrap();
        let k = 2;
        let r1 = rcca_fit(d.x.view(), d.y.view(), k, &RccaConfig::with_c(1.0)).unwrap();
        let pls = pls_fit(d.x.view(), d.y.view(), k, &RccaConfig::default()).unwrap();
        let r0 = rcca_fit(d.x.view(), d.y.view(), k, &RccaConfig::with_c(0.0)).unwrap();
        let cca = cca_fit(d.x.view(), d.y.view(), k).unwrap();
        for j in 0..k {
            assert!(abs_cosine(r1.w_x.column(j), pls.w_x.column(j)) > 1.0 - 1e-6);
            assert!(abs_cosine(r0.w_x.column(j), cca.w_x.column(j)) > 1.0 - 1e-5);
            assert!(abs_cosine(r0.w_y.as_ref().unwrap().column(j), cca.w_y.as_ref().unwrap().column(j)) > 1.0 - 1e-5);
        }
    }

    #[test]
    fn deflated_residual_vanishes() {
        let m = noise(11, 4, 3);
        let res = power_svd(m.clone(), 3, 1e-12, 100_000, true).unwrap();
        let lead = res.s[0];
        assert!(res.residual.iter().all(|v| v.abs() < 1e-8 * lead));
        // One more direction on the exhausted residual has zero criterion.
        let again = power_svd(res.residual, 1, 1e-12, 1000, true).unwrap();
        assert!(again.s[0] < 1e-8 * lead);
    }

    #[test]
    fn project_shapes() {
        let basis = ProjectionBasis {
            method: Method::Pca,
            w_x: Array2::eye(3),
            w_y: None,
            criterion: vec![1.0; 3],
            diagnostics: Diagnostics::default(),
        };
        let x = noise(12, 5, 3);
        assert_eq!(project(&basis, x.view(), None).unwrap().0, x);
        assert!(project(&basis, Array2::zeros((2, 3)).view(), None).unwrap().0.iter().all(|v| *v == 0.0));
        assert!(matches!(project(&basis, noise(1, 2, 4).view(), None), Err(Error::Shape(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn directions_are_scale_equivariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
            let spec = LinearModelSpec::from_snr(8, 300, 1, 1, 1.0, 2.0, seed, seed + 1);
            let d = generate_linear_model(&spec).unwrap();
            let xs = &d.x * scale;
            for method in [Method::Pca, Method::Pls, Method::Cca, Method::Rcca] {
                let a = fit(method, d.x.view(), d.y.view(), 2, &RccaConfig::default()).unwrap();
                let b = fit(method, xs.view(), d.y.view(), 2, &RccaConfig::default()).unwrap();
                for j in 0..2 {
                    prop_assert!(abs_cosine(a.w_x.column(j), b.w_x.column(j)) > 1.0 - 1e-6);
                }
            }
        }
    }
}
