//! Gaussian quasi-maximum-likelihood estimation with Bollerslev-Wooldridge
//! (sandwich) standard errors.
//!
//! Variance parameters of the GARCH and GJR families are optimized on the log
//! scale, so every trial point is feasible; mean and regressor loadings, and
//! all log-variance parameters, are optimized directly. Persistence is not
//! bounded. Standard errors are reported for the original parameterization by
//! the delta method.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::p_value;
use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::model::{FamilyKind, Initialization, Model, ModelSpec, ParamVector, VariancePath};
use crate::numdiff::{finite_diff_hessian, finite_diff_jacobian, GRADIENT_STEP, HESSIAN_STEP};
use crate::ols::ols;
use crate::optim::{minimize, OptimOptions};

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Moment-matched start plus `starts - 1` jittered copies.
    pub starts: usize,
    pub seed: u64,
    pub optim: OptimOptions,
    /// Parameters held at a given value, by name (see `ModelSpec::param_names`).
    pub fixed: Vec<(String, f64)>,
    /// Replaces the moment-matched start.
    pub initial: Option<ParamVector>,
    /// Run the starts on the rayon pool.
    pub parallel: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 5, seed: 0, optim: OptimOptions::default(), fixed: Vec::new(), initial: None, parallel: true }
    }
}

impl FitOptions {
    pub fn fix(mut self, name: impl Into<String>, value: f64) -> Self {
        self.fixed.push((name.into(), value));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub fixed: bool,
    pub std_error: Option<f64>,
    pub z_stat: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: ParamVector,
    pub loglik: f64,
    pub n_obs: usize,
    pub coefficients: Vec<Coefficient>,
    /// Names of the free parameters, the index set of the covariance matrices.
    pub free: Vec<String>,
    /// Sandwich covariance of the free parameters.
    pub robust_cov: Vec<Vec<f64>>,
    /// Inverse-Hessian covariance of the free parameters.
    pub hessian_cov: Vec<Vec<f64>>,
    /// The Hessian was singular and a pseudo-inverse was used.
    pub covariance_singular: bool,
    pub variance_path: VariancePath,
    pub standardized_residuals: Vec<f64>,
    pub persistence: f64,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub evaluations: usize,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn conditional_vol(&self) -> Vec<f64> {
        self.variance_path.std_devs()
    }
}

/// Sandwich and inverse-Hessian covariance over a parameter subset.
#[derive(Debug, Clone)]
pub struct RobustCovariance {
    pub names: Vec<String>,
    pub robust: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
    /// Average per-observation score in the reported parameterization.
    pub mean_score: Vec<f64>,
    pub singular: bool,
}

impl RobustCovariance {
    pub fn robust_std_errors(&self) -> Vec<f64> {
        (0..self.robust.nrows()).map(|i| self.robust[(i, i)].max(0.0).sqrt()).collect()
    }

    pub fn hessian_std_errors(&self) -> Vec<f64> {
        (0..self.hessian.nrows()).map(|i| self.hessian[(i, i)].max(0.0).sqrt()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Transform {
    Identity,
    Exp,
}

impl Transform {
    fn to_natural(self, theta: f64) -> f64 {
        match self {
            Self::Identity => theta,
            Self::Exp => theta.exp(),
        }
    }

    fn to_internal(self, value: f64) -> f64 {
        match self {
            Self::Identity => value,
            Self::Exp => value.max(1e-8).ln(),
        }
    }

    /// d(natural) / d(internal)
    fn derivative(self, theta: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Exp => theta.exp(),
        }
    }
}

fn transforms(spec: &ModelSpec) -> Vec<Transform> {
    let positive = !matches!(spec.family.kind, FamilyKind::LogEgarch);
    spec.param_names()
        .iter()
        .map(|name| {
            let variance_core = name == "omega"
                || name.starts_with("alpha")
                || name.starts_with("beta")
                || name.starts_with("gamma");
            if positive && variance_core { Transform::Exp } else { Transform::Identity }
        })
        .collect()
}

/// Maps free internal coordinates to the full natural parameter vector.
struct Layout {
    transforms: Vec<Transform>,
    free: Vec<usize>,
    /// Natural values of the full vector; free slots are overwritten.
    base: Vec<f64>,
}

impl Layout {
    fn natural(&self, theta_free: &[f64]) -> Vec<f64> {
        let mut full = self.base.clone();
        for (&i, &th) in self.free.iter().zip(theta_free) {
            full[i] = self.transforms[i].to_natural(th);
        }
        full
    }

    fn internal(&self, natural: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| self.transforms[i].to_internal(natural[i])).collect()
    }
}

fn neg_loglik(model: &Model, spec: &ModelSpec, natural: &[f64]) -> f64 {
    let Ok(p) = ParamVector::from_flat(spec, natural) else { return f64::INFINITY };
    match model.log_likelihood(&p) {
        Ok(l) if l.value.is_finite() => -l.value,
        _ => f64::INFINITY,
    }
}

fn moment_start(model: &Model) -> Result<(ParamVector, Vec<f64>, f64)> {
    let spec = model.spec();
    let n = model.len();
    let k = spec.n_mean();
    let y = model.dependent();
    let (b, b_se, resid) = if k == 0 {
        (vec![], vec![], y.to_vec())
    } else {
        let x = DMatrix::from_fn(n, k, |t, j| model.mean_row(t)[j]);
        let fit = ols(y, x)?;
        let resid = model.residuals(&fit.coef)?;
        (fit.coef, fit.std_errors, resid)
    };
    let s2 = (resid.iter().map(|e| e * e).sum::<f64>() / n as f64).max(1e-8);

    let f = spec.family;
    let mut p = ParamVector::zeros(spec);
    p.b = b;
    match f.kind {
        FamilyKind::Garch | FamilyKind::Gjr => {
            let (a, g, bt) = match (f.kind, f.q) {
                (FamilyKind::Garch, 0) => (0.3, 0.0, 0.0),
                (FamilyKind::Garch, _) => (0.05, 0.0, 0.90),
                (_, 0) => (0.2, 0.1, 0.0),
                _ => (0.03, 0.06, 0.90),
            };
            p.alpha = vec![a / f.p as f64; f.p];
            if f.kind == FamilyKind::Gjr {
                p.gamma = vec![g / f.p as f64; f.p];
            }
            p.beta = vec![bt / f.q.max(1) as f64; f.q];
            p.omega = s2 * (1.0 - p.persistence(f.kind));
        }
        FamilyKind::LogEgarch => {
            let bt = if f.q == 0 { 0.0 } else { 0.95 };
            p.alpha = vec![0.1 / f.p as f64; f.p];
            p.gamma = vec![0.0; f.p];
            p.beta = vec![bt / f.q.max(1) as f64; f.q];
            p.omega = (1.0 - bt) * s2.ln();
        }
    }
    Ok((p, b_se, s2))
}

fn check_variance_design(model: &Model) -> Result<()> {
    let kv = model.spec().variance_regressors.len();
    if kv == 0 {
        return Ok(());
    }
    let n = model.len();
    let x = DMatrix::from_fn(n, kv + 1, |t, j| if j == 0 { 1.0 } else { model.var_row(t)[j - 1] });
    let probe: Vec<f64> = (0..n).map(|t| (t as f64 * 0.618_033_988_7).fract()).collect();
    ols(&probe, x).map(|_| ())
}

pub fn fit(spec: &ModelSpec, panel: &Panel, options: &FitOptions) -> Result<FitResult> {
    let model = Model::new(spec.clone(), panel)?;
    fit_model(&model, options)
}

pub fn fit_model(model: &Model, options: &FitOptions) -> Result<FitResult> {
    let spec = model.spec().clone();
    let names = spec.param_names();
    let trans = transforms(&spec);

    let mut fixed_idx = Vec::new();
    for (name, _) in &options.fixed {
        let i = names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
        fixed_idx.push(i);
    }
    let free: Vec<usize> = (0..names.len()).filter(|i| !fixed_idx.contains(i)).collect();
    let needed = 10 * free.len();
    if model.len() < needed {
        return Err(Error::InsufficientSample { needed, got: model.len() });
    }
    check_variance_design(model)?;

    let (moment, b_se, s2) = moment_start(model)?;
    let start = options.initial.clone().unwrap_or(moment);
    start.check_shape(&spec)?;
    let mut base = start.to_flat();
    for ((_, v), &i) in options.fixed.iter().zip(&fixed_idx) {
        base[i] = *v;
    }
    let layout = Layout { transforms: trans.clone(), free: free.clone(), base: base.clone() };
    let theta0 = layout.internal(&base);

    // jitter scale per free coordinate
    let n_mean = spec.n_mean();
    let scales: Vec<f64> = free
        .iter()
        .map(|&i| {
            if i < n_mean {
                0.5 * b_se.get(i).copied().unwrap_or(0.0).max(1e-3 * s2.sqrt())
            } else if names[i].starts_with("var:") {
                let j = i - (names.len() - spec.variance_regressors.len());
                let col: Vec<f64> = (0..model.len()).map(|t| model.var_row(t)[j]).collect();
                let m = col.iter().sum::<f64>() / col.len() as f64;
                let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64).sqrt();
                0.05 * s2 / sd.max(1e-8)
            } else if trans[i] == Transform::Exp {
                0.5
            } else {
                0.05
            }
        })
        .collect();

    let starts: Vec<Vec<f64>> = (0..options.starts.max(1))
        .map(|s| {
            if s == 0 {
                theta0.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(s as u64);
                theta0
                    .iter()
                    .zip(&scales)
                    .map(|(t, sc)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        t + sc * z
                    })
                    .collect::<Vec<f64>>()
            }
        })
        .collect();

    let objective = |theta: &[f64]| neg_loglik(model, &spec, &layout.natural(theta));
    let run = |x0: &Vec<f64>| minimize(objective, x0, &options.optim);
    let results: Vec<_> =
        if options.parallel { starts.par_iter().map(run).collect() } else { starts.iter().map(run).collect() };

    let evaluations = results.iter().map(|r| r.evals).sum();
    let best = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.f.is_finite())
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r.clone())
        .ok_or(Error::AllStartsDiverged)?;

    let natural = layout.natural(&best.x);
    let params = ParamVector::from_flat(&spec, &natural)?;
    let cov = covariance_at(model, &layout, &best.x)?;

    let path = model.variance_path(&params, &Initialization::SampleVariance)?;
    let standardized = path.standardized();
    let robust_se = cov.robust_std_errors();
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(i, name)| match free.iter().position(|&f| f == i) {
            Some(k) => {
                let se = robust_se[k];
                let z = natural[i] / se;
                Coefficient {
                    name: name.clone(),
                    estimate: natural[i],
                    fixed: false,
                    std_error: Some(se),
                    z_stat: Some(z),
                    p_value: Some(if z.is_nan() { 1.0 } else { p_value(z) }),
                }
            }
            None => Coefficient {
                name: name.clone(),
                estimate: natural[i],
                fixed: true,
                std_error: None,
                z_stat: None,
                p_value: None,
            },
        })
        .collect();

    let to_rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    Ok(FitResult {
        persistence: params.persistence(spec.family.kind),
        loglik: -best.f,
        n_obs: model.len(),
        coefficients,
        free: cov.names.clone(),
        robust_cov: to_rows(&cov.robust),
        hessian_cov: to_rows(&cov.hessian),
        covariance_singular: cov.singular,
        standardized_residuals: standardized,
        variance_path: path,
        converged: best.converged,
        iterations: best.iterations,
        restarts: options.starts.max(1),
        evaluations,
        params,
        spec,
    })
}

/// Sandwich covariance `A^-1 B A^-1 / T` for all parameters of `spec` at
/// `params`, with `A` the average negative Hessian and `B` the average outer
/// product of per-observation scores.
pub fn bw_robust_covariance(spec: &ModelSpec, params: &ParamVector, panel: &Panel) -> Result<RobustCovariance> {
    let model = Model::new(spec.clone(), panel)?;
    params.check_shape(spec)?;
    let natural = params.to_flat();
    let layout = Layout { transforms: transforms(spec), free: (0..natural.len()).collect(), base: natural.clone() };
    let theta = layout.internal(&natural);
    covariance_at(&model, &layout, &theta)
}

fn covariance_at(model: &Model, layout: &Layout, theta: &[f64]) -> Result<RobustCovariance> {
    let spec = model.spec();
    let n = model.len() as f64;
    let k = theta.len();
    let names = spec.param_names();

    let densities = |th: &[f64]| -> Option<Vec<f64>> {
        let p = ParamVector::from_flat(spec, &layout.natural(th)).ok()?;
        let (d, path) = model.log_densities(&p, &Initialization::SampleVariance).ok()?;
        (!path.diverged).then_some(d)
    };
    let total = |th: &[f64]| densities(th).map_or(f64::NAN, |d| d.iter().sum());

    let scores = finite_diff_jacobian(densities, theta, GRADIENT_STEP)?;
    let hess = finite_diff_hessian(total, theta, HESSIAN_STEP)?;
    let a = -hess / n;
    let b = scores.transpose() * &scores / n;

    let (a_inv, singular) = match a.clone().cholesky() {
        Some(ch) => (ch.inverse(), false),
        None => {
            let pinv = a.clone().pseudo_inverse(1e-12).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (pinv, true)
        }
    };
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let robust_theta = sym(&a_inv * b * &a_inv / n);
    let hessian_theta = sym(a_inv / n);

    let jac: Vec<f64> = layout.free.iter().zip(theta).map(|(&i, &th)| layout.transforms[i].derivative(th)).collect();
    let delta = |m: &DMatrix<f64>| DMatrix::from_fn(k, k, |i, j| jac[i] * m[(i, j)] * jac[j]);
    let mean_score = (0..k)
        .map(|j| scores.column(j).sum() / n / if jac[j] != 0.0 { jac[j] } else { 1.0 })
        .collect();

    Ok(RobustCovariance {
        names: layout.free.iter().map(|&i| names[i].clone()).collect(),
        robust: delta(&robust_theta),
        hessian: delta(&hessian_theta),
        mean_score,
        singular,
    })
}
