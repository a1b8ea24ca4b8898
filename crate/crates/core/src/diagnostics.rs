//! Misspecification tests on fitted residuals: Ljung-Box portmanteau on the
//! levels and squares, Engle's LM test for remaining ARCH, and the Engle-Ng
//! sign and size bias regressions.

use serde::{Deserialize, Serialize};

use crate::dist::{chi2_sf, p_value};
use crate::error::{Error, Result};
use crate::model::{FamilyKind, ParamVector};
use crate::ols::{ols, with_constant};
use crate::series_stats::acf;

pub const DEFAULT_LAGS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchLm {
    pub statistic: f64,
    pub p_value: f64,
    /// Observations in the auxiliary regression.
    pub n: usize,
    /// The lag matrix was collinear (e.g. constant squares); statistic set to 0.
    pub degenerate: bool,
}

/// Slope estimate of a single-regressor bias test with its t-statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasTest {
    pub coefficient: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngleNg {
    pub sign: BiasTest,
    pub negative_size: BiasTest,
    pub positive_size: BiasTest,
    /// `n R^2` from the joint regression, chi-squared with 3 degrees of freedom.
    pub joint: TestResult,
    pub n: usize,
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub q_stat: f64,
    pub q_p: f64,
    pub q2_stat: f64,
    pub q2_p: f64,
    pub arch_stat: f64,
    pub arch_p: f64,
    pub sign_t: f64,
    pub sign_p: f64,
    pub nsize_t: f64,
    pub nsize_p: f64,
    pub psize_t: f64,
    pub psize_p: f64,
    pub joint_stat: f64,
    pub joint_p: f64,
    pub lags_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    pub persistence: f64,
    pub stationary: bool,
}

/// `Q = T (T + 2) sum_{k<=m} r_k^2 / (T - k)`, chi-squared with `m` degrees of freedom.
pub fn ljung_box(series: &[f64], m: usize) -> Result<TestResult> {
    let n = series.len();
    if m == 0 || 4 * m >= n {
        return Err(Error::InvalidArgument(format!("lag depth {m} must be positive and below T/4 = {}", n / 4)));
    }
    let profile = acf(series, m)?;
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * profile.correlations.iter().enumerate().map(|(i, r)| r * r / (nf - (i + 1) as f64)).sum::<f64>();
    Ok(TestResult { statistic: q, p_value: chi2_sf(q, m) })
}

/// Engle's LM test: regress `y_t^2` on a constant and `lags` of itself,
/// statistic `n R^2` against chi-squared(`lags`).
pub fn lm_arch(series: &[f64], lags: usize) -> Result<ArchLm> {
    let n_total = series.len();
    if lags == 0 || 4 * lags >= n_total {
        return Err(Error::InvalidArgument(format!("lag depth {lags} must be positive and below T/4 = {}", n_total / 4)));
    }
    let sq: Vec<f64> = series.iter().map(|v| v * v).collect();
    let y = &sq[lags..];
    let n = y.len();
    let cols: Vec<&[f64]> = (1..=lags).map(|k| &sq[lags - k..n_total - k]).collect();
    let degenerate = ArchLm { statistic: 0.0, p_value: 1.0, n, degenerate: true };
    match ols(y, with_constant(&cols)) {
        Ok(fit) => match fit.r_squared {
            Some(r2) => {
                let stat = n as f64 * r2.max(0.0);
                Ok(ArchLm { statistic: stat, p_value: chi2_sf(stat, lags), n, degenerate: false })
            }
            None => Ok(degenerate),
        },
        Err(Error::RankDeficient) => Ok(degenerate),
        Err(e) => Err(e),
    }
}

/// Engle-Ng sign bias, negative and positive size bias, and joint tests.
///
/// Regressand `y_t^2`; regressors `N_{t-1} = 1{y_{t-1} < 0}`,
/// `N_{t-1} y_{t-1}` and `P_{t-1} y_{t-1}` with `P = 1 - N`.
pub fn engle_ng(residuals: &[f64]) -> Result<EngleNg> {
    let t = residuals.len();
    if t < 30 {
        return Err(Error::TooShort { needed: 30, got: t });
    }
    let lagged = &residuals[..t - 1];
    let y: Vec<f64> = residuals[1..].iter().map(|v| v * v).collect();
    let neg: Vec<f64> = lagged.iter().map(|v| if *v < 0.0 { 1.0 } else { 0.0 }).collect();
    let n_neg = neg.iter().filter(|v| **v == 1.0).count();
    if n_neg == 0 || n_neg == neg.len() {
        return Err(Error::NoSignVariation);
    }
    let neg_size: Vec<f64> = lagged.iter().zip(&neg).map(|(v, d)| d * v).collect();
    let pos_size: Vec<f64> = lagged.iter().zip(&neg).map(|(v, d)| (1.0 - d) * v).collect();

    let single = |x: &[f64]| -> Result<BiasTest> {
        let fit = ols(&y, with_constant(&[x]))?;
        let t_stat = fit.coef[1] / fit.std_errors[1];
        Ok(BiasTest { coefficient: fit.coef[1], t_stat, p_value: p_value(t_stat) })
    };
    let joint_fit = ols(&y, with_constant(&[&neg, &neg_size, &pos_size]))?;
    let r2 = joint_fit.r_squared.ok_or(Error::ZeroVariance)?;
    let stat = joint_fit.n as f64 * r2.max(0.0);

    Ok(EngleNg {
        sign: single(&neg)?,
        negative_size: single(&neg_size)?,
        positive_size: single(&pos_size)?,
        joint: TestResult { statistic: stat, p_value: chi2_sf(stat, 3) },
        n: y.len(),
    })
}

/// Persistence of the variance process and whether it is below one.
pub fn stationarity_report(kind: FamilyKind, params: &ParamVector) -> Stationarity {
    let persistence = params.persistence(kind);
    let stationary = match kind {
        FamilyKind::LogEgarch => persistence.abs() < 1.0,
        _ => persistence < 1.0,
    };
    Stationarity { persistence, stationary }
}

/// Runs the full battery on (standardized) residuals.
pub fn diagnose(residuals: &[f64], lags: usize) -> Result<DiagnosticsReport> {
    let q = ljung_box(residuals, lags)?;
    let squares: Vec<f64> = residuals.iter().map(|v| v * v).collect();
    let q2 = ljung_box(&squares, lags)?;
    let arch = lm_arch(residuals, lags)?;
    let en = engle_ng(residuals)?;
    Ok(DiagnosticsReport {
        q_stat: q.statistic,
        q_p: q.p_value,
        q2_stat: q2.statistic,
        q2_p: q2.p_value,
        arch_stat: arch.statistic,
        arch_p: arch.p_value,
        sign_t: en.sign.t_stat,
        sign_p: en.sign.p_value,
        nsize_t: en.negative_size.t_stat,
        nsize_p: en.negative_size.p_value,
        psize_t: en.positive_size.t_stat,
        psize_p: en.positive_size.p_value,
        joint_stat: en.joint.statistic,
        joint_p: en.joint.p_value,
        lags_used: lags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wiggle(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919 + 13) % 97) as f64 / 48.5 - 1.0 + 0.3 * ((i as f64) * 0.7).sin()).collect()
    }

    #[test]
    fn ljung_box_zero_for_uncorrelated_fixture() {
        // 1, 0, -1, 0 repeated: zero mean, every lag-1 product is zero
        let x: Vec<f64> = [1.0, 0.0, -1.0, 0.0].iter().cycle().take(40).copied().collect();
        let r = acf(&x, 1).unwrap();
        assert_eq!(r.correlations[0], 0.0);
        let lb = ljung_box(&x, 1).unwrap();
        assert_eq!(lb.statistic, 0.0);
        assert_eq!(lb.p_value, 1.0);
    }

    #[test]
    fn ljung_box_requires_short_lag_depth() {
        assert!(ljung_box(&wiggle(40), 10).is_err());
        assert!(ljung_box(&wiggle(41), 10).is_ok());
        assert!(ljung_box(&[1.0; 50], 2).is_err());
    }

    #[test]
    fn lm_arch_degenerate_when_squares_constant() {
        let x: Vec<f64> = (0..200).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let r = lm_arch(&x, 4).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn engle_ng_requires_sign_variation() {
        let x: Vec<f64> = (1..=40).map(f64::from).collect();
        assert_eq!(engle_ng(&x).unwrap_err(), Error::NoSignVariation);
        assert!(matches!(engle_ng(&x[..10]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn sign_symmetric_fixture_has_no_sign_bias() {
        let a: Vec<f64> = wiggle(40).iter().map(|v| v + 1.5).collect();
        let mut y = a.clone();
        y.extend(a.iter().map(|v| -v));
        y.push(a[0]);
        let en = engle_ng(&y).unwrap();
        assert!(en.sign.coefficient.abs() < 1e-12, "{}", en.sign.coefficient);
    }

    #[test]
    fn stationarity_examples() {
        let s = stationarity_report(FamilyKind::Garch, &ParamVector::garch11(0.0, 0.1, 0.226, 0.359));
        assert!((s.persistence - 0.585).abs() < 1e-12 && s.stationary);
        let s = stationarity_report(FamilyKind::Garch, &ParamVector::garch11(0.0, 0.1, 0.288, 0.752));
        assert!((s.persistence - 1.040).abs() < 1e-12 && !s.stationary);
        let s = stationarity_report(FamilyKind::Garch, &ParamVector::garch11(0.0, 0.1, 0.0, 0.0));
        assert_eq!(s.persistence, 0.0);
        assert!(s.stationary);
        let s = stationarity_report(FamilyKind::Gjr, &ParamVector::gjr11(0.0, 0.1, 0.05, 0.1, 0.85));
        assert!((s.persistence - 0.95).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn statistics_are_scale_invariant(c in 0.01f64..100.0, shift in 0usize..50) {
            let x: Vec<f64> = wiggle(300 + shift);
            let y: Vec<f64> = x.iter().map(|v| v * c).collect();
            let a = diagnose(&x, 12).unwrap();
            let b = diagnose(&y, 12).unwrap();
            for (u, v) in [
                (a.q_stat, b.q_stat), (a.q2_stat, b.q2_stat), (a.arch_stat, b.arch_stat),
                (a.sign_t, b.sign_t), (a.nsize_t, b.nsize_t), (a.psize_t, b.psize_t), (a.joint_stat, b.joint_stat),
            ] {
                prop_assert!((u - v).abs() < 1e-9 * u.abs().max(1.0), "{} vs {}", u, v);
            }
        }

        #[test]
        fn ljung_box_monotone_in_lags(seed in 0usize..200) {
            let x = wiggle(200 + seed);
            let mut prev = 0.0;
            for m in 1..40 {
                let q = ljung_box(&x, m).unwrap().statistic;
                prop_assert!(q >= prev);
                prev = q;
            }
        }
    }
}
