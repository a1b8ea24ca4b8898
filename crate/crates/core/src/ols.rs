use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    pub coef: Vec<f64>,
    /// Classical standard errors, `sqrt(s^2 (X'X)^-1)` with `s^2 = RSS / (n - k)`.
    pub std_errors: Vec<f64>,
    /// Centered R^2; `None` when the regressand is constant.
    pub r_squared: Option<f64>,
    pub n: usize,
}

/// Least squares via the thin SVD. Fails on a rank-deficient design.
pub(crate) fn ols(y: &[f64], x: DMatrix<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if n != y.len() {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n <= k {
        return Err(Error::TooShort { needed: k + 1, got: n });
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.iter().any(|s| *s <= smax * 1e-10) {
        return Err(Error::RankDeficient);
    }
    let yv = DVector::from_column_slice(y);
    let coef = svd.solve(&yv, 0.0).map_err(|_| Error::RankDeficient)?;
    let resid = &yv - &x * &coef;
    let rss = resid.norm_squared();
    let ybar = yv.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();

    let v_t = svd.v_t.as_ref().expect("requested");
    let s = &svd.singular_values;
    // (X'X)^-1 = V diag(1/s^2) V'
    let xtx_inv: DMatrix<f64> = DMatrix::from_fn(k, k, |i, j| (0..k).map(|m| v_t[(m, i)] * v_t[(m, j)] / (s[m] * s[m])).sum());
    let s2 = rss / (n - k) as f64;
    Ok(OlsFit {
        coef: coef.iter().copied().collect(),
        std_errors: (0..k).map(|i| (s2 * xtx_inv[(i, i)]).max(0.0).sqrt()).collect(),
        r_squared: (tss > 0.0).then(|| 1.0 - rss / tss),
        n,
    })
}

/// Design matrix with a leading constant column followed by `columns`.
pub(crate) fn with_constant(columns: &[&[f64]]) -> DMatrix<f64> {
    let n = columns.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, columns.len() + 1, |t, j| if j == 0 { 1.0 } else { columns[j - 1][t] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = ols(&y, with_constant(&[&x])).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12);
        assert!((fit.coef[1] - 3.0).abs() < 1e-12);
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let z: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!(matches!(ols(&x, with_constant(&[&x, &z])), Err(Error::RankDeficient)));
    }
}
