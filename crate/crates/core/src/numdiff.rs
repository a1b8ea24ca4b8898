//! Central finite differences.
//!
//! Steps are relative: `h_i = max(h * |x_i|, h)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default step for first derivatives.
pub const GRADIENT_STEP: f64 = 1e-6;
/// Default step for second derivatives.
pub const HESSIAN_STEP: f64 = 1e-4;

fn step(x: f64, h: f64) -> f64 {
    (h * x.abs()).max(h)
}

fn finite(v: f64, at: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("non-finite evaluation inside the difference stencil at {at:?}")))
    }
}

pub fn finite_diff_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let hi = step(x[i], h);
        xp[i] = x[i] + hi;
        let up = finite(f(&xp), &xp)?;
        xp[i] = x[i] - hi;
        let down = finite(f(&xp), &xp)?;
        xp[i] = x[i];
        g.push((up - down) / (2.0 * hi));
    }
    Ok(g)
}

/// Symmetrized central-difference Hessian.
pub fn finite_diff_hessian<F>(f: F, x: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let steps: Vec<f64> = x.iter().map(|v| step(*v, h)).collect();
    let f0 = finite(f(x), x)?;
    let mut m = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for i in 0..n {
        let hi = steps[i];
        xp[i] = x[i] + hi;
        let up = finite(f(&xp), &xp)?;
        xp[i] = x[i] - hi;
        let down = finite(f(&xp), &xp)?;
        xp[i] = x[i];
        m[(i, i)] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut eval = |si: f64, sj: f64| {
                xp[i] = x[i] + si * hi;
                xp[j] = x[j] + sj * hj;
                let v = f(&xp);
                let r = finite(v, &xp);
                xp[i] = x[i];
                xp[j] = x[j];
                r
            };
            let v = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?) / (4.0 * hi * hj);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Central-difference Jacobian of a vector-valued map: row `t` holds the
/// gradient of output `t`. Used for per-observation scores.
pub fn finite_diff_jacobian<F>(f: F, x: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let mut xp = x.to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let hi = step(x[i], h);
        xp[i] = x[i] + hi;
        let up = f(&xp);
        xp[i] = x[i] - hi;
        let down = f(&xp);
        xp[i] = x[i];
        let (Some(up), Some(down)) = (up, down) else {
            return Err(Error::InvalidArgument(format!("non-finite evaluation inside the difference stencil at {x:?}")));
        };
        if up.iter().chain(&down).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite evaluation inside the difference stencil at {x:?}")));
        }
        cols.push(up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * hi)).collect());
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows, x.len(), |t, i| cols[i][t]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_square() {
        let g = finite_diff_gradient(|x| x[0] * x[0], &[3.0], GRADIENT_STEP).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn hessian_of_quadratic_form() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, -0.3, 4.0, 1.2, 0.0, 0.7, 1.5]);
        let f = |x: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (v.transpose() * &q * &v)[(0, 0)]
        };
        let h = finite_diff_hessian(f, &[0.3, -1.2, 2.0], HESSIAN_STEP).unwrap();
        let expect = &q + q.transpose();
        assert!((h - expect).abs().max() < 1e-4);
    }

    #[test]
    fn jacobian_rows_are_gradients() {
        let j = finite_diff_jacobian(|x| Some(vec![x[0] * x[1], x[0].sin()]), &[0.5, 2.0], GRADIENT_STEP).unwrap();
        assert!((j[(0, 0)] - 2.0).abs() < 1e-8);
        assert!((j[(0, 1)] - 0.5).abs() < 1e-8);
        assert!((j[(1, 0)] - 0.5f64.cos()).abs() < 1e-8);
        assert!(j[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn non_finite_stencil_is_an_error() {
        let f = |x: &[f64]| if x[0] > 1.0 { f64::NAN } else { x[0] };
        assert!(finite_diff_gradient(f, &[1.0], 1e-3).is_err());
        assert!(finite_diff_hessian(f, &[1.0], 1e-3).is_err());
    }
}
