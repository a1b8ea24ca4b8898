//! Reference distributions used for p-values.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Two-sided normal p-value, `2 * (1 - Phi(|z|))`, evaluated through the lower
/// tail so small p-values keep their precision.
pub fn p_value(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    (2.0 * std_normal().cdf(-z.abs())).min(1.0)
}

/// Upper tail of chi-squared with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let d = ChiSquared::new(df as f64).expect("df > 0");
    d.sf(x).clamp(0.0, 1.0)
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
///
/// Uses the alternating series for large `lambda` and the theta-function form
/// for small `lambda`, where the alternating series converges slowly.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K <= l) = sqrt(2 pi)/l * sum_k exp(-(2k-1)^2 pi^2 / (8 l^2))
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * pi2 / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < 1e-18 {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_examples() {
        assert_eq!(p_value(0.0), 1.0);
        assert!((p_value(1.959964) - 0.05).abs() < 1e-6);
        for z in [0.3, 1.1, 2.5, 4.0] {
            assert_eq!(p_value(z), p_value(-z));
        }
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // both series are valid everywhere; compare at the switch point
        let l: f64 = 1.18;
        let mut alt = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let t = (-2.0 * kf * kf * l * l).exp();
            alt += if k % 2 == 1 { t } else { -t };
        }
        alt *= 2.0;
        assert!((kolmogorov_sf(l - 1e-12) - alt).abs() < 1e-12);
        // textbook value: P(K > 1.36) ~ 0.0495
        assert!((kolmogorov_sf(1.36) - 0.0495).abs() < 5e-4);
    }
}
