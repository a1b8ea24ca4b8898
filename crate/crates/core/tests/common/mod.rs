//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gaussian log-likelihood of a GJR(1,1) path (GARCH when `gamma = 0`) with
/// constant mean `mu`, written out one observation at a time.
///
/// Start-up: pre-sample residual 0 and pre-sample variance equal to the
/// divisor-n variance of the residuals, so `H_1 = omega + beta * s2`.
pub fn gjr_density_sum(y: &[f64], mu: f64, omega: f64, alpha: f64, gamma: f64, beta: f64) -> f64 {
    let e: Vec<f64> = y.iter().map(|v| v - mu).collect();
    let n = e.len() as f64;
    let ebar = e.iter().sum::<f64>() / n;
    let s2 = e.iter().map(|v| (v - ebar).powi(2)).sum::<f64>() / n;
    let mut prev_e = 0.0;
    let mut prev_h = s2;
    let mut total = 0.0;
    for &et in &e {
        let neg = if prev_e < 0.0 { gamma } else { 0.0 };
        let h = omega + (alpha + neg) * prev_e * prev_e + beta * prev_h;
        let density = (-(et * et) / (2.0 * h)).exp() / (2.0 * PI * h).sqrt();
        total += density.ln();
        prev_e = et;
        prev_h = h;
    }
    total
}

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| solve(a.to_vec(), (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()))
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

pub struct Regression {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub r2: f64,
    pub n: usize,
}

/// OLS with an intercept via the normal equations; R^2 from a separate
/// centered pass over the fitted residuals.
pub fn regress(y: &[f64], xs: &[Vec<f64>]) -> Regression {
    let n = y.len();
    let rows: Vec<Vec<f64>> =
        (0..n).map(|t| std::iter::once(1.0).chain(xs.iter().map(|x| x[t])).collect()).collect();
    let k = xs.len() + 1;
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (row, yt) in rows.iter().zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yt;
            for j in 0..k {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve(xtx.clone(), xty);
    let resid: Vec<f64> =
        rows.iter().zip(y).map(|(r, yt)| yt - r.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>()).collect();
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let s2 = rss / (n - k) as f64;
    let inv = invert(&xtx);
    Regression { se: (0..k).map(|i| (s2 * inv[i][i]).sqrt()).collect(), coef, r2: 1.0 - rss / tss, n }
}

/// Ljung-Box Q written directly from its definition.
pub fn ljung_box(x: &[f64], m: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    let mut q = 0.0;
    for k in 1..=m {
        let mut ck = 0.0;
        for t in k..n {
            ck += d[t] * d[t - k];
        }
        let r = ck / c0;
        q += r * r / (n - k) as f64;
    }
    n as f64 * (n as f64 + 2.0) * q
}

/// `n R^2` of squares on a constant and `lags` of themselves.
pub fn lm_arch(x: &[f64], lags: usize) -> f64 {
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let y = sq[lags..].to_vec();
    let xs: Vec<Vec<f64>> = (1..=lags).map(|k| sq[lags - k..sq.len() - k].to_vec()).collect();
    let r = regress(&y, &xs);
    r.n as f64 * r.r2
}

/// Sign, negative-size, positive-size t-statistics and the joint `n R^2`.
pub fn engle_ng(x: &[f64]) -> [f64; 4] {
    let y: Vec<f64> = x[1..].iter().map(|v| v * v).collect();
    let lag = &x[..x.len() - 1];
    let s: Vec<f64> = lag.iter().map(|v| if *v < 0.0 { 1.0 } else { 0.0 }).collect();
    let ns: Vec<f64> = lag.iter().map(|v| if *v < 0.0 { *v } else { 0.0 }).collect();
    let ps: Vec<f64> = lag.iter().map(|v| if *v < 0.0 { 0.0 } else { *v }).collect();
    let t = |reg: &Vec<f64>| {
        let r = regress(&y, std::slice::from_ref(reg));
        r.coef[1] / r.se[1]
    };
    let joint = regress(&y, &[s.clone(), ns.clone(), ps.clone()]);
    [t(&s), t(&ns), t(&ps), joint.n as f64 * joint.r2]
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`: power series below `a + 1`,
/// modified Lentz continued fraction above.
pub fn upper_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() - x - ln_gamma(a)).exp();
    if x < a + 1.0 {
        let mut sum = 1.0 / a;
        let mut term = sum;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        1.0 - front * sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        front * h
    }
}

/// Chi-squared upper tail.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    upper_gamma_q(df as f64 / 2.0, x / 2.0)
}

/// Deterministic pseudo-random fixture (xorshift plus Box-Muller), no library RNG.
pub fn fixture(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut uniform = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        ((s >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    (0..n).map(|_| (-2.0 * uniform().ln()).sqrt() * (2.0 * PI * uniform()).cos()).collect()
}

/// Fixture with volatility clustering and asymmetry so every regression has signal.
pub fn clustered_fixture(n: usize, seed: u64) -> Vec<f64> {
    let z = fixture(n, seed);
    let mut h = 1.0;
    let mut prev: f64 = 0.0;
    z.iter()
        .map(|zt| {
            let neg = if prev < 0.0 { 0.15 } else { 0.0 };
            h = 0.05 + (0.05 + neg) * prev * prev + 0.85 * h;
            prev = zt * h.sqrt();
            prev
        })
        .collect()
}

/// `a` and `b` agree to `tol` relative to `max(|b|, 1)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
