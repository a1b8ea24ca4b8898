mod common;

use chrono::NaiveDate;
use common::close;
use condvol::diagnostics::{engle_ng, ljung_box, lm_arch};
use condvol::dist::{chi2_sf, p_value};
use condvol::ingest::business_days;
use condvol::model::{log_likelihood, simulate};
use condvol::{ModelSpec, Panel, ParamVector, VarianceFamily};

fn panel_of(y: &[f64]) -> Panel {
    let dates = business_days(NaiveDate::from_ymd_opt(2001, 3, 1).unwrap(), y.len());
    Panel::new(dates).unwrap().with_column("y", y.to_vec()).unwrap()
}

#[test]
fn five_point_likelihood_matches_density_sum() {
    let y = [0.4, -1.3, 0.2, 2.1, -0.7];
    let panel = panel_of(&y);
    let spec = ModelSpec::new("y", VarianceFamily::garch11());
    let p = ParamVector::garch11(0.1, 0.2, 0.15, 0.7);
    let got = log_likelihood(&spec, &p, &panel).unwrap().value;
    let want = common::gjr_density_sum(&y, 0.1, 0.2, 0.15, 0.0, 0.7);
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");

    let spec = ModelSpec::new("y", VarianceFamily::gjr11());
    let p = ParamVector::gjr11(-0.05, 0.2, 0.1, 0.2, 0.6);
    let got = log_likelihood(&spec, &p, &panel).unwrap().value;
    let want = common::gjr_density_sum(&y, -0.05, 0.2, 0.1, 0.2, 0.6);
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
}

#[test]
fn chi_squared_tail_matches_incomplete_gamma() {
    for df in [1, 2, 3, 5, 12, 24, 60] {
        for x in [0.01, 0.5, 1.0, 3.0, 7.8, 15.0, 24.0, 36.4, 50.0, 90.0] {
            let got = chi2_sf(x, df);
            let want = common::chi2_sf(x, df);
            assert!((got - want).abs() < 1e-10, "df {df} x {x}: {got} vs {want}");
        }
    }
}

#[test]
fn normal_p_value_examples() {
    assert_eq!(p_value(0.0), 1.0);
    assert!((p_value(1.959964) - 0.05).abs() < 1e-6);
    for z in [0.3, 1.1, 2.5, 4.0] {
        assert_eq!(p_value(z), p_value(-z));
    }
}

#[test]
fn ljung_box_matches_formula() {
    for seed in 1..4 {
        let x = common::clustered_fixture(600, seed);
        for m in [1, 5, 24] {
            let got = ljung_box(&x, m).unwrap().statistic;
            assert!(close(got, common::ljung_box(&x, m), 1e-10), "m {m}");
        }
    }
}

#[test]
fn lm_arch_matches_normal_equation_regression() {
    for seed in 1..4 {
        let x = common::clustered_fixture(800, seed);
        for lags in [1, 4, 24] {
            let got = lm_arch(&x, lags).unwrap();
            assert!(!got.degenerate);
            assert!(close(got.statistic, common::lm_arch(&x, lags), 1e-10), "lags {lags}");
            assert_eq!(got.n, 800 - lags);
        }
    }
}

#[test]
fn engle_ng_matches_normal_equation_regressions() {
    for seed in 1..4 {
        let x = common::clustered_fixture(700, seed);
        let got = engle_ng(&x).unwrap();
        let want = common::engle_ng(&x);
        let have = [got.sign.t_stat, got.negative_size.t_stat, got.positive_size.t_stat, got.joint.statistic];
        for (h, w) in have.iter().zip(&want) {
            assert!(close(*h, *w, 1e-10), "{h} vs {w}");
        }
        assert!(close(got.joint.p_value, common::chi2_sf(want[3], 3), 1e-10));
    }
}

#[test]
fn truth_maximizes_expected_likelihood() {
    let spec = ModelSpec::new("y", VarianceFamily::garch11());
    let truth = ParamVector::garch11(0.0, 0.05, 0.10, 0.85);
    let flat = truth.to_flat();
    let panels: Vec<Panel> = (0..50).map(|s| simulate(&spec, &truth, 10_000, 500, 1000 + s).unwrap().panel).collect();
    let ll = |p: &[f64], panel: &Panel| {
        log_likelihood(&spec, &ParamVector::from_flat(&spec, p).unwrap(), panel).unwrap().value
    };
    let base: Vec<f64> = panels.iter().map(|p| ll(&flat, p)).collect();
    for i in 0..flat.len() {
        for sign in [-1.0, 1.0] {
            let mut q = flat.clone();
            q[i] += sign * if i == 0 { 0.05 } else { 0.2 * flat[i] };
            let drop: f64 = panels.iter().zip(&base).map(|(p, b)| b - ll(&q, p)).sum::<f64>() / 50.0;
            assert!(drop > 0.0, "param {i} shifted {sign}: mean change {drop}");
        }
    }
}
