//! Descriptive statistics, autocorrelation and normality testing for return
//! and volatility series.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dist::{kolmogorov_sf, normal_cdf};
use crate::error::{Error, Result};

/// Date-indexed percent returns for a single asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch { left: dates.len(), right: values.len() });
        }
        if values.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: values.len() });
        }
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnorderedDates(i + 1));
        }
        check_finite(&values)?;
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub std_dev: f64,
    /// `None` when the series has zero variance.
    pub skewness_excess: Option<f64>,
    /// Moment ratio `m4 / m2^2 - 3`; `None` when the series has zero variance.
    pub kurtosis_excess: Option<f64>,
    /// `None` when the KS test is not defined (fewer than 8 points or zero variance).
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Sample autocorrelations at lags `1..=max_lag`; lag 0 is implicitly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfProfile {
    pub correlations: Vec<f64>,
    pub band: f64,
    pub n: usize,
}

impl AcfProfile {
    pub fn max_lag(&self) -> usize {
        self.correlations.len()
    }

    /// Correlation at `lag`, with lag 0 equal to 1.
    pub fn at(&self, lag: usize) -> Option<f64> {
        if lag == 0 {
            Some(1.0)
        } else {
            self.correlations.get(lag - 1).copied()
        }
    }

    pub fn lags(&self) -> impl Iterator<Item = usize> {
        1..=self.correlations.len()
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Central moment of order `k` about `mu` with divisor `n`.
fn central_moment(values: &[f64], mu: f64, k: i32) -> f64 {
    values.iter().map(|v| (v - mu).powi(k)).sum::<f64>() / values.len() as f64
}

/// Type-7 quantile of already sorted data.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(series: &ReturnSeries) -> Result<SummaryStats> {
    summarize_values(series.values())
}

/// Summary statistics of an arbitrary sample (returns or fitted volatilities).
pub fn summarize_values(values: &[f64]) -> Result<SummaryStats> {
    if values.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: values.len() });
    }
    check_finite(values)?;
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mu = mean(values);
    let m2 = central_moment(values, mu, 2);
    let degenerate = sorted[0] == sorted[n - 1];
    let (skew, kurt) = if degenerate || m2 <= 0.0 {
        (None, None)
    } else {
        let m3 = central_moment(values, mu, 3);
        let m4 = central_moment(values, mu, 4);
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    };
    let ks = ks_normality(values).ok();

    Ok(SummaryStats {
        n,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
        mean: mu,
        std_dev: (m2 * n as f64 / (n - 1) as f64).sqrt(),
        skewness_excess: skew,
        kurtosis_excess: kurt,
        ks_statistic: ks.map(|k| k.statistic),
        ks_p_value: ks.map(|k| k.p_value),
    })
}

/// One-sample Kolmogorov-Smirnov distance of the standardized sample from the
/// standard normal, with the asymptotic Kolmogorov p-value.
///
/// The sample is standardized by its own mean and (n-1) standard deviation;
/// the p-value does not correct for the estimated parameters.
pub fn ks_normality(values: &[f64]) -> Result<KsResult> {
    if values.len() < 8 {
        return Err(Error::TooShort { needed: 8, got: values.len() });
    }
    check_finite(values)?;
    let n = values.len();
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = values.iter().map(|v| (v - mu) / sd).collect();
    z.sort_by(f64::total_cmp);

    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        // ties: the ECDF jumps once over the whole run of equal values
        let mut j = i;
        while j + 1 < n && z[j + 1] == z[i] {
            j += 1;
        }
        let f = normal_cdf(z[i]);
        d = d.max(f - i as f64 / nf).max((j + 1) as f64 / nf - f);
        i = j + 1;
    }
    Ok(KsResult { statistic: d, p_value: kolmogorov_sf(nf.sqrt() * d) })
}

/// Sample autocorrelation function with full-sample mean and divisor `T`.
pub fn acf(values: &[f64], max_lag: usize) -> Result<AcfProfile> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if 2 * max_lag >= n {
        return Err(Error::InvalidArgument(format!(
            "max_lag {max_lag} must be below half the sample size {n}"
        )));
    }
    check_finite(values)?;
    let mu = mean(values);
    let c: Vec<f64> = values.iter().map(|v| v - mu).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    if c0 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let correlations = (1..=max_lag)
        .map(|k| c[k..].iter().zip(&c[..n - k]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect();
    Ok(AcfProfile { correlations, band: acf_band(n), n })
}

/// Half-width of the 95% white-noise band, `1.96 / sqrt(T)`.
pub fn acf_band(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}

/// Returns scaled by conditional volatility.
pub fn standardize(returns: &[f64], conditional_vol: &[f64]) -> Result<Vec<f64>> {
    if returns.len() != conditional_vol.len() {
        return Err(Error::LengthMismatch { left: returns.len(), right: conditional_vol.len() });
    }
    if let Some(i) = conditional_vol.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositive { index: i, value: conditional_vol[i] });
    }
    Ok(returns.iter().zip(conditional_vol).map(|(r, s)| r / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn symmetric_three_points() {
        let s = summarize_values(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.skewness_excess, Some(0.0));
        assert_eq!(s.median, 0.0);
        assert_eq!(s.ks_statistic, None);
    }

    #[test]
    fn too_short_and_constant() {
        assert!(matches!(summarize_values(&[1.0, 2.0]), Err(Error::TooShort { .. })));
        let s = summarize_values(&[2.5; 10]).unwrap();
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.skewness_excess, None);
        assert_eq!(s.kurtosis_excess, None);
        assert_eq!(s.ks_statistic, None);
        assert_eq!(ks_normality(&[2.5; 10]), Err(Error::ZeroVariance));
        assert_eq!(acf(&[2.5; 10], 2).unwrap_err(), Error::ZeroVariance);
    }

    #[test]
    fn type7_quartiles() {
        // numpy.percentile([1,2,3,4,10], [25,50,75]) == [2, 3, 4]
        let s = summarize_values(&[10.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        // [1,2,3,4] -> 1.75, 2.5, 3.25
        let s = summarize_values(&[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
    }

    #[test]
    fn normal_moments_within_sampling_bands() {
        let s = summarize_values(&normals(10_000, 11)).unwrap();
        assert!(s.skewness_excess.unwrap().abs() < 0.08);
        assert!(s.kurtosis_excess.unwrap().abs() < 0.15);
    }

    #[test]
    fn ks_large_normal_sample() {
        let ks = ks_normality(&normals(50_000, 5)).unwrap();
        assert!(ks.statistic < 0.01, "{}", ks.statistic);
        assert!(ks.p_value > 0.01);
    }

    #[test]
    fn ks_quantile_matched_sample() {
        let n = 1000;
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::ContinuousCDF;
        let x: Vec<f64> =
            (1..=n).map(|i| normal.inverse_cdf((i as f64 - 0.5) / n as f64)).collect();
        let ks = ks_normality(&x).unwrap();
        // standardizing by the sample sd moves the points slightly off the
        // exact quantiles, hence the 1e-4 allowance
        assert!(ks.statistic <= 0.5 / n as f64 + 1e-4, "{}", ks.statistic);
    }

    #[test]
    fn ks_matches_brute_force_ecdf_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..1000).map(|_| u.sample(&mut rng)).collect();

        let n = x.len() as f64;
        let mu = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0)).sqrt();
        let mut sup: f64 = 0.0;
        for &xi in &x {
            let zi = (xi - mu) / sd;
            let at = x.iter().filter(|&&v| (v - mu) / sd <= zi).count() as f64 / n;
            let below = x.iter().filter(|&&v| (v - mu) / sd < zi).count() as f64 / n;
            let f = normal_cdf(zi);
            sup = sup.max((at - f).abs()).max((f - below).abs());
        }
        let ks = ks_normality(&x).unwrap();
        assert!((ks.statistic - sup).abs() < 1e-12);
    }

    #[test]
    fn acf_examples() {
        let x = normals(200, 3);
        let a = acf(&x, 10).unwrap();
        assert_eq!(a.at(0), Some(1.0));
        assert_eq!(a.max_lag(), 10);
        assert!(acf(&x, 100).is_err());

        // AR(1) with phi = 0.5
        let e = normals(50_000, 4);
        let mut y = vec![0.0; e.len()];
        for t in 1..e.len() {
            y[t] = 0.5 * y[t - 1] + e[t];
        }
        let r1 = acf(&y, 1).unwrap().correlations[0];
        assert!((0.45..=0.55).contains(&r1), "{r1}");
    }

    #[test]
    fn band_values() {
        assert!((acf_band(1104) - 0.0590).abs() < 1e-4);
        assert_eq!(acf_band(1), 1.96);
        assert!((acf_band(400) - 0.098).abs() < 1e-12);
    }

    #[test]
    fn standardize_examples() {
        let r = [0.5, -1.0, 2.0];
        assert_eq!(standardize(&r, &[1.0; 3]).unwrap(), r.to_vec());
        let v = [0.5, 1.5, 3.0];
        let twice: Vec<f64> = v.iter().map(|s| 2.0 * s).collect();
        assert_eq!(standardize(&twice, &v).unwrap(), vec![2.0; 3]);
        assert!(matches!(standardize(&r, &[1.0, 0.0, 1.0]), Err(Error::NonPositive { index: 1, .. })));
        assert!(standardize(&r, &[1.0]).is_err());
    }

    #[test]
    fn return_series_invariants() {
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        assert!(ReturnSeries::new(vec![d("2000-01-03"), d("2000-01-04")], vec![1.0, 2.0]).is_ok());
        assert!(matches!(
            ReturnSeries::new(vec![d("2000-01-04"), d("2000-01-03")], vec![1.0, 2.0]),
            Err(Error::UnorderedDates(1))
        ));
        assert!(ReturnSeries::new(vec![d("2000-01-03"), d("2000-01-04")], vec![1.0, f64::NAN]).is_err());
        assert!(ReturnSeries::new(vec![d("2000-01-03")], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn quartiles_ordered_and_permutation_invariant(
            mut x in prop::collection::vec(-50.0f64..50.0, 3..60),
            seed in any::<u64>(),
        ) {
            let s = summarize_values(&x).unwrap();
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
            prop_assert!(s.std_dev >= 0.0);

            use rand::seq::SliceRandom;
            x.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let t = summarize_values(&x).unwrap();
            prop_assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (t.min, t.q1, t.median, t.q3, t.max));
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs());
            prop_assert!(close(s.mean, t.mean) && close(s.std_dev, t.std_dev));
            match (s.kurtosis_excess, t.kurtosis_excess) {
                (Some(a), Some(b)) => prop_assert!(close(a, b)),
                (a, b) => prop_assert_eq!(a, b),
            }
            match (s.ks_statistic, t.ks_statistic) {
                (Some(a), Some(b)) => prop_assert!(close(a, b)),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn acf_bounded_and_reversal_symmetric(x in prop::collection::vec(-10.0f64..10.0, 20..80)) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
            let k = x.len() / 2 - 1;
            let a = acf(&x, k).unwrap();
            let rev: Vec<f64> = x.iter().rev().copied().collect();
            let b = acf(&rev, k).unwrap();
            for (ra, rb) in a.correlations.iter().zip(&b.correlations) {
                prop_assert!(ra.abs() <= 1.0 + 1e-12);
                prop_assert!((ra - rb).abs() < 1e-12);
            }
        }

        #[test]
        fn ks_location_scale_invariant(
            x in prop::collection::vec(-5.0f64..5.0, 8..100),
            shift in -100.0f64..100.0,
            scale in 0.01f64..100.0,
        ) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
            let a = ks_normality(&x).unwrap();
            let y: Vec<f64> = x.iter().map(|v| shift + scale * v).collect();
            let b = ks_normality(&y).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-12);
        }

        #[test]
        fn band_strictly_decreasing(n in 1usize..1_000_000) {
            prop_assert!(acf_band(n + 1) < acf_band(n));
        }
    }
}
