//! Model specification, mean and conditional-variance recursions, Gaussian
//! log-likelihood and the process simulator.
//!
//! Three variance families are supported:
//!
//! * `Garch`: `H_t = w + sum a_i e_{t-i}^2 + sum b_j H_{t-j} + d'X_t`
//! * `Gjr`: adds `sum g_i S_{t-i} e_{t-i}^2` with `S = 1` for negative shocks
//! * `LogEgarch`: `ln H_t = w + sum b_j ln H_{t-j} + sum [a_i (|z| - sqrt(2/pi)) + g_i z]_{t-i} + d'X_t`
//!
//! The mean equation is `R_t = b'Z_t + e_t`. Regressor terms name a panel
//! column and a lag; the usable sample starts after the deepest lag.

use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{business_days, Panel};
use crate::series_stats::ReturnSeries;

/// Lower bound on any conditional variance, in %^2 units.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Weight of the squared floor violation subtracted from the log-likelihood.
pub const CLAMP_PENALTY: f64 = 1e6;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Garch,
    Gjr,
    LogEgarch,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "garch" => Ok(Self::Garch),
            "gjr" | "gjr-garch" | "gjr_garch" => Ok(Self::Gjr),
            "egarch" | "log_egarch" | "log-egarch" => Ok(Self::LogEgarch),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Garch => "garch",
            Self::Gjr => "gjr",
            Self::LogEgarch => "egarch",
        })
    }
}

/// Variance family with `p` ARCH lags and `q` GARCH lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarianceFamily {
    pub kind: FamilyKind,
    pub p: usize,
    pub q: usize,
}

impl VarianceFamily {
    pub fn new(kind: FamilyKind, p: usize, q: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("ARCH order p must be at least 1".into()));
        }
        Ok(Self { kind, p, q })
    }

    pub fn garch11() -> Self {
        Self { kind: FamilyKind::Garch, p: 1, q: 1 }
    }

    pub fn gjr11() -> Self {
        Self { kind: FamilyKind::Gjr, p: 1, q: 1 }
    }

    pub fn log_egarch11() -> Self {
        Self { kind: FamilyKind::LogEgarch, p: 1, q: 1 }
    }

    pub fn has_gamma(&self) -> bool {
        matches!(self.kind, FamilyKind::Gjr | FamilyKind::LogEgarch)
    }

    fn presample_len(&self) -> usize {
        self.p.max(self.q).max(1)
    }
}

/// A regressor: panel column `column` observed `lag` rows before `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    pub column: String,
    pub lag: usize,
}

impl Term {
    pub fn current(column: impl Into<String>) -> Self {
        Self { column: column.into(), lag: 0 }
    }

    pub fn lagged(column: impl Into<String>, lag: usize) -> Self {
        Self { column: column.into(), lag }
    }

    /// Parses `name` or `L<k>.name`; a bare name gets `default_lag`.
    pub fn parse(text: &str, default_lag: usize) -> Result<Self> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix('L') {
            if let Some((digits, name)) = rest.split_once('.') {
                if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) && !name.is_empty() {
                    let lag = digits.parse().map_err(|_| Error::InvalidArgument(text.into()))?;
                    return Ok(Self::lagged(name, lag));
                }
            }
        }
        if text.is_empty() {
            return Err(Error::InvalidArgument("empty regressor name".into()));
        }
        Ok(Self { column: text.to_string(), lag: default_lag })
    }

    pub fn label(&self) -> String {
        if self.lag == 0 {
            self.column.clone()
        } else {
            format!("L{}.{}", self.lag, self.column)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dependent: String,
    pub family: VarianceFamily,
    pub mean_regressors: Vec<Term>,
    pub variance_regressors: Vec<Term>,
    pub include_constant_mean: bool,
}

impl ModelSpec {
    /// Constant mean, no regressors.
    pub fn new(dependent: impl Into<String>, family: VarianceFamily) -> Self {
        Self {
            dependent: dependent.into(),
            family,
            mean_regressors: Vec::new(),
            variance_regressors: Vec::new(),
            include_constant_mean: true,
        }
    }

    pub fn with_mean(mut self, terms: impl IntoIterator<Item = Term>) -> Self {
        self.mean_regressors.extend(terms);
        self
    }

    pub fn with_variance(mut self, terms: impl IntoIterator<Item = Term>) -> Self {
        self.variance_regressors.extend(terms);
        self
    }

    pub fn without_constant(mut self) -> Self {
        self.include_constant_mean = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.family.p == 0 {
            return Err(Error::InvalidArgument("ARCH order p must be at least 1".into()));
        }
        for terms in [&self.mean_regressors, &self.variance_regressors] {
            let mut seen = std::collections::HashSet::new();
            for t in terms {
                if t.column == self.dependent && t.lag == 0 {
                    return Err(Error::InvalidArgument(format!("`{}` cannot explain itself contemporaneously", t.column)));
                }
                if !seen.insert(t.label()) {
                    return Err(Error::DuplicateName(t.label()));
                }
            }
        }
        Ok(())
    }

    /// Number of mean coefficients including the constant.
    pub fn n_mean(&self) -> usize {
        self.mean_regressors.len() + usize::from(self.include_constant_mean)
    }

    pub fn n_params(&self) -> usize {
        let f = &self.family;
        self.n_mean() + 1 + f.p + if f.has_gamma() { f.p } else { 0 } + f.q + self.variance_regressors.len()
    }

    /// Deepest regressor lag; the first usable observation.
    pub fn max_lag(&self) -> usize {
        self.mean_regressors.iter().chain(&self.variance_regressors).map(|t| t.lag).max().unwrap_or(0)
    }

    /// Flat parameter names in `ParamVector::to_flat` order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        if self.include_constant_mean {
            names.push("const".to_string());
        }
        names.extend(self.mean_regressors.iter().map(|t| format!("mean:{}", t.label())));
        names.push("omega".into());
        names.extend((1..=self.family.p).map(|i| format!("alpha{i}")));
        if self.family.has_gamma() {
            names.extend((1..=self.family.p).map(|i| format!("gamma{i}")));
        }
        names.extend((1..=self.family.q).map(|j| format!("beta{j}")));
        names.extend(self.variance_regressors.iter().map(|t| format!("var:{}", t.label())));
        names
    }
}

/// Parameters of one model. `b` holds the mean coefficients with the constant
/// first when the spec includes one; `gamma` is empty for plain GARCH.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub b: Vec<f64>,
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(spec: &ModelSpec) -> Self {
        let f = &spec.family;
        Self {
            b: vec![0.0; spec.n_mean()],
            omega: 0.0,
            alpha: vec![0.0; f.p],
            gamma: vec![0.0; if f.has_gamma() { f.p } else { 0 }],
            beta: vec![0.0; f.q],
            delta: vec![0.0; spec.variance_regressors.len()],
        }
    }

    /// GARCH(1,1)-shaped parameters with a constant mean `mu`.
    pub fn garch11(mu: f64, omega: f64, alpha: f64, beta: f64) -> Self {
        Self { b: vec![mu], omega, alpha: vec![alpha], gamma: vec![], beta: vec![beta], delta: vec![] }
    }

    pub fn gjr11(mu: f64, omega: f64, alpha: f64, gamma: f64, beta: f64) -> Self {
        Self { b: vec![mu], omega, alpha: vec![alpha], gamma: vec![gamma], beta: vec![beta], delta: vec![] }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.b.len() + 1 + self.alpha.len() * 2 + self.beta.len() + self.delta.len());
        v.extend(&self.b);
        v.push(self.omega);
        v.extend(&self.alpha);
        v.extend(&self.gamma);
        v.extend(&self.beta);
        v.extend(&self.delta);
        v
    }

    pub fn from_flat(spec: &ModelSpec, flat: &[f64]) -> Result<Self> {
        if flat.len() != spec.n_params() {
            return Err(Error::ParamMismatch(format!("expected {} values, got {}", spec.n_params(), flat.len())));
        }
        let mut it = flat.iter().copied();
        let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<f64>>();
        let f = &spec.family;
        let b = take(spec.n_mean());
        let omega = take(1)[0];
        let alpha = take(f.p);
        let gamma = take(if f.has_gamma() { f.p } else { 0 });
        let beta = take(f.q);
        let delta = take(spec.variance_regressors.len());
        Ok(Self { b, omega, alpha, gamma, beta, delta })
    }

    pub fn check_shape(&self, spec: &ModelSpec) -> Result<()> {
        let f = &spec.family;
        let ok = self.b.len() == spec.n_mean()
            && self.alpha.len() == f.p
            && self.gamma.len() == if f.has_gamma() { f.p } else { 0 }
            && self.beta.len() == f.q
            && self.delta.len() == spec.variance_regressors.len();
        if ok {
            Ok(())
        } else {
            Err(Error::ParamMismatch(format!("shape does not match {} parameters", spec.n_params())))
        }
    }

    /// Sum of ARCH and GARCH loadings (plus half the asymmetry loadings for
    /// GJR). For the log-variance family this is the sum of the lagged
    /// log-variance loadings.
    pub fn persistence(&self, kind: FamilyKind) -> f64 {
        let a: f64 = self.alpha.iter().sum();
        let b: f64 = self.beta.iter().sum();
        let g: f64 = self.gamma.iter().sum();
        match kind {
            FamilyKind::Garch => a + b,
            FamilyKind::Gjr => a + b + 0.5 * g,
            FamilyKind::LogEgarch => b,
        }
    }
}

/// Pre-sample state, oldest first, most recent last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Presample {
    pub residuals: Vec<f64>,
    pub variances: Vec<f64>,
}

/// How the recursion is started.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Initialization {
    /// Pre-sample variances equal the sample variance of the residuals and
    /// pre-sample residuals are zero; `H_1` comes out of the recursion.
    #[default]
    SampleVariance,
    /// Explicit pre-sample state.
    Presample(Presample),
    /// `H_1` fixed at the given value, zero pre-sample residuals.
    FirstVariance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePath {
    pub residuals: Vec<f64>,
    pub variances: Vec<f64>,
    /// Observations whose variance was lifted to `VARIANCE_FLOOR`.
    pub clamped: usize,
    /// Sum of squared floor violations.
    pub penalty: f64,
    pub diverged: bool,
}

impl VariancePath {
    pub fn std_devs(&self) -> Vec<f64> {
        self.variances.iter().map(|h| h.sqrt()).collect()
    }

    pub fn standardized(&self) -> Vec<f64> {
        self.residuals.iter().zip(&self.variances).map(|(e, h)| e / h.sqrt()).collect()
    }
}

/// A spec bound to the panel columns it reads, restricted to the usable sample.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    dates: Vec<NaiveDate>,
    y: Vec<f64>,
    /// Row-major `n x n_mean`, constant column included.
    mean_x: Vec<f64>,
    /// Row-major `n x n_var`.
    var_x: Vec<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec, panel: &Panel) -> Result<Self> {
        spec.validate()?;
        let lag = spec.max_lag();
        if panel.len() <= lag + 1 {
            return Err(Error::TooShort { needed: lag + 2, got: panel.len() });
        }
        let n = panel.len() - lag;
        let y = panel.column(&spec.dependent)?[lag..].to_vec();

        let gather = |terms: &[Term], constant: bool| -> Result<Vec<f64>> {
            let cols: Vec<(&Term, &[f64])> =
                terms.iter().map(|t| panel.column(&t.column).map(|c| (t, c))).collect::<Result<_>>()?;
            for (term, col) in &cols {
                let window = &col[lag - term.lag..lag - term.lag + n];
                if window.iter().all(|v| *v == window[0]) {
                    return Err(Error::DegenerateRegressor(term.label()));
                }
            }
            let k = cols.len() + usize::from(constant);
            let mut out = Vec::with_capacity(n * k);
            for t in 0..n {
                if constant {
                    out.push(1.0);
                }
                for (term, col) in &cols {
                    out.push(col[lag + t - term.lag]);
                }
            }
            Ok(out)
        };
        let mean_x = gather(&spec.mean_regressors, spec.include_constant_mean)?;
        let var_x = gather(&spec.variance_regressors, false)?;
        Ok(Self { dates: panel.dates()[lag..].to_vec(), y, mean_x, var_x, spec })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn dependent(&self) -> &[f64] {
        &self.y
    }

    pub fn mean_row(&self, t: usize) -> &[f64] {
        let k = self.spec.n_mean();
        &self.mean_x[t * k..(t + 1) * k]
    }

    pub fn var_row(&self, t: usize) -> &[f64] {
        let k = self.spec.variance_regressors.len();
        &self.var_x[t * k..(t + 1) * k]
    }

    /// `e_t = R_t - b'Z_t` over the usable sample.
    pub fn residuals(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.spec.n_mean() {
            return Err(Error::ParamMismatch(format!("{} mean coefficients for {} regressors", b.len(), self.spec.n_mean())));
        }
        Ok((0..self.len()).map(|t| self.y[t] - dot(b, self.mean_row(t))).collect())
    }

    pub fn variance_path(&self, params: &ParamVector, init: &Initialization) -> Result<VariancePath> {
        params.check_shape(&self.spec)?;
        let e = self.residuals(&params.b)?;
        variance_recursion_with(&self.spec.family, params, e, |t| self.var_row(t), init)
    }

    /// Per-observation Gaussian log-densities and the path they came from.
    pub fn log_densities(&self, params: &ParamVector, init: &Initialization) -> Result<(Vec<f64>, VariancePath)> {
        let path = self.variance_path(params, init)?;
        let ll = path
            .residuals
            .iter()
            .zip(&path.variances)
            .map(|(e, h)| -0.5 * (LN_2PI + h.ln() + e * e / h))
            .collect();
        Ok((ll, path))
    }

    pub fn log_likelihood(&self, params: &ParamVector) -> Result<Likelihood> {
        self.log_likelihood_with(params, &Initialization::SampleVariance)
    }

    pub fn log_likelihood_with(&self, params: &ParamVector, init: &Initialization) -> Result<Likelihood> {
        let (dens, path) = self.log_densities(params, init)?;
        let value = if path.diverged {
            f64::NEG_INFINITY
        } else {
            let v = dens.iter().sum::<f64>() - CLAMP_PENALTY * path.penalty;
            if v.is_finite() { v } else { f64::NEG_INFINITY }
        };
        Ok(Likelihood { value, diverged: path.diverged || !value.is_finite(), clamped: path.clamped })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Likelihood {
    /// `-inf` when the recursion diverged.
    pub value: f64,
    pub diverged: bool,
    pub clamped: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sample_variance(e: &[f64]) -> f64 {
    let n = e.len() as f64;
    let m = e.iter().sum::<f64>() / n;
    e.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
}

/// Mean-equation residuals `R_t - b'Z_t` for `spec` on `panel`.
pub fn mean_residuals(spec: &ModelSpec, b: &[f64], panel: &Panel) -> Result<Vec<f64>> {
    Model::new(spec.clone(), panel)?.residuals(b)
}

/// Conditional-variance path for given residuals; `panel` supplies the
/// variance regressors and must be the panel the residuals were computed on.
pub fn variance_recursion(
    spec: &ModelSpec,
    params: &ParamVector,
    residuals: &[f64],
    panel: &Panel,
    init: &Initialization,
) -> Result<VariancePath> {
    params.check_shape(spec)?;
    if residuals.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let lag = spec.max_lag();
    let cols: Vec<(usize, &[f64])> =
        spec.variance_regressors.iter().map(|t| panel.column(&t.column).map(|c| (t.lag, c))).collect::<Result<_>>()?;
    if panel.len() != residuals.len() + lag {
        return Err(Error::LengthMismatch { left: panel.len() - lag.min(panel.len()), right: residuals.len() });
    }
    let mut row = vec![0.0; cols.len()];
    let rows: Vec<Vec<f64>> = (0..residuals.len())
        .map(|t| {
            for (slot, (l, c)) in row.iter_mut().zip(&cols) {
                *slot = c[lag + t - l];
            }
            row.clone()
        })
        .collect();
    variance_recursion_with(&spec.family, params, residuals.to_vec(), |t| &rows[t], init)
}

/// One step of the variance recursion from lagged residuals/variances.
///
/// `lag_e(i)` and `lag_h(i)` return the residual and variance `i` steps back.
fn next_variance(
    family: &VarianceFamily,
    p: &ParamVector,
    lag_e: impl Fn(usize) -> f64,
    lag_h: impl Fn(usize) -> f64,
    x: &[f64],
) -> f64 {
    let reg = dot(&p.delta, x);
    match family.kind {
        FamilyKind::Garch | FamilyKind::Gjr => {
            let mut h = p.omega;
            for i in 0..family.p {
                let e = lag_e(i + 1);
                let e2 = e * e;
                h += p.alpha[i] * e2;
                if family.kind == FamilyKind::Gjr && e < 0.0 {
                    h += p.gamma[i] * e2;
                }
            }
            for j in 0..family.q {
                h += p.beta[j] * lag_h(j + 1);
            }
            h + reg
        }
        FamilyKind::LogEgarch => {
            let mut lh = p.omega;
            for j in 0..family.q {
                lh += p.beta[j] * lag_h(j + 1).ln();
            }
            let abs_mean = FRAC_2_PI.sqrt();
            for i in 0..family.p {
                let z = lag_e(i + 1) / lag_h(i + 1).sqrt();
                lh += p.alpha[i] * (z.abs() - abs_mean) + p.gamma[i] * z;
            }
            (lh + reg).exp()
        }
    }
}

fn variance_recursion_with<'a>(
    family: &VarianceFamily,
    params: &ParamVector,
    residuals: Vec<f64>,
    var_row: impl Fn(usize) -> &'a [f64],
    init: &Initialization,
) -> Result<VariancePath> {
    let n = residuals.len();
    if n == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let m = family.presample_len();
    let (pre_e, pre_h, first): (Vec<f64>, Vec<f64>, Option<f64>) = match init {
        Initialization::SampleVariance => {
            let s2 = sample_variance(&residuals).max(VARIANCE_FLOOR);
            (vec![0.0; m], vec![s2; m], None)
        }
        Initialization::FirstVariance(h1) => (vec![0.0; m], vec![*h1; m], Some(*h1)),
        Initialization::Presample(ps) => {
            if ps.residuals.len() < m || ps.variances.len() < m {
                return Err(Error::InvalidArgument(format!("presample state needs {m} entries")));
            }
            (ps.residuals[ps.residuals.len() - m..].to_vec(), ps.variances[ps.variances.len() - m..].to_vec(), None)
        }
    };

    let mut h = Vec::with_capacity(n);
    let mut clamped = 0;
    let mut penalty = 0.0;
    let mut diverged = false;
    for t in 0..n {
        let raw = match (t, first) {
            (0, Some(h1)) => h1,
            _ => {
                let lag_e = |i: usize| if i <= t { residuals[t - i] } else { pre_e[m + t - i] };
                let lag_h = |i: usize| if i <= t { h[t - i] } else { pre_h[m + t - i] };
                next_variance(family, params, lag_e, lag_h, var_row(t))
            }
        };
        let v = if !raw.is_finite() {
            diverged = true;
            f64::INFINITY
        } else if raw < VARIANCE_FLOOR {
            clamped += 1;
            penalty += (VARIANCE_FLOOR - raw).powi(2);
            VARIANCE_FLOOR
        } else {
            raw
        };
        h.push(v);
        if diverged {
            break;
        }
    }
    if diverged {
        h.resize(n, f64::INFINITY);
    }
    Ok(VariancePath { residuals, variances: h, clamped, penalty, diverged })
}

/// Gaussian log-likelihood of `spec` at `params` on `panel`.
pub fn log_likelihood(spec: &ModelSpec, params: &ParamVector, panel: &Panel) -> Result<Likelihood> {
    Model::new(spec.clone(), panel)?.log_likelihood(params)
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    /// Simulate even when the variance process is not covariance stationary.
    pub allow_explosive: bool,
    pub start_date: Option<NaiveDate>,
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct Simulation {
    /// Dependent series, simulated exogenous columns and the calendar dummies.
    pub panel: Panel,
    pub returns: ReturnSeries,
    /// True residuals per panel row.
    pub residuals: Vec<f64>,
    /// True conditional variances per panel row.
    pub variances: Vec<f64>,
    /// State immediately before the usable sample of `Model::new(spec, &panel)`.
    pub presample: Presample,
    /// Names of the simulated exogenous columns.
    pub exogenous: Vec<String>,
}

pub fn simulate(spec: &ModelSpec, params: &ParamVector, t: usize, burn_in: usize, seed: u64) -> Result<Simulation> {
    simulate_with(spec, params, t, burn_in, seed, &SimulationOptions::default())
}

/// Simulates `t` observations after discarding `burn_in`.
///
/// Regressor columns that are neither the dependent nor a calendar dummy are
/// drawn iid standard normal from a separate random stream. Lags of the
/// dependent evolve with the simulated series.
pub fn simulate_with(
    spec: &ModelSpec,
    params: &ParamVector,
    t: usize,
    burn_in: usize,
    seed: u64,
    opts: &SimulationOptions,
) -> Result<Simulation> {
    spec.validate()?;
    params.check_shape(spec)?;
    let family = spec.family;
    let persistence = params.persistence(family.kind);
    let explosive = match family.kind {
        FamilyKind::LogEgarch => persistence.abs() >= 1.0,
        _ => persistence >= 1.0,
    };
    if explosive && !opts.allow_explosive {
        return Err(Error::Explosive(persistence));
    }
    if t < 2 {
        return Err(Error::TooShort { needed: 2, got: t });
    }
    if matches!(family.kind, FamilyKind::Garch | FamilyKind::Gjr) && params.omega <= 0.0 {
        return Err(Error::InvalidArgument("omega must be positive".into()));
    }

    let total = burn_in + t;
    let start = opts.start_date.unwrap_or_else(|| NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid"));
    // burn-in rows get dates too so dummies line up with the retained sample
    let all_dates = business_days(start, total);
    let dates = all_dates[burn_in..].to_vec();

    let mut exog_names: Vec<String> = Vec::new();
    let dummy_cols = crate::ingest::build_dummies(&all_dates);
    let is_dummy = |name: &str| dummy_cols.iter().any(|(d, _)| d == name);
    for term in spec.mean_regressors.iter().chain(&spec.variance_regressors) {
        if term.column != spec.dependent && !is_dummy(&term.column) && !exog_names.contains(&term.column) {
            exog_names.push(term.column.clone());
        }
    }
    let mut exog_rng = ChaCha8Rng::seed_from_u64(seed);
    exog_rng.set_stream(1);
    let exog: Vec<Vec<f64>> =
        exog_names.iter().map(|_| (0..total).map(|_| StandardNormal.sample(&mut exog_rng)).collect()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; total];
    let mut e = vec![0.0; total];
    let mut h = vec![0.0; total];

    let m = family.presample_len();
    let uncond = match family.kind {
        FamilyKind::LogEgarch if !explosive => (params.omega / (1.0 - persistence)).exp(),
        FamilyKind::LogEgarch => params.omega.exp(),
        _ if !explosive => params.omega / (1.0 - persistence),
        _ => params.omega,
    };
    let pre_e = vec![0.0; m];
    let pre_h = vec![uncond.max(VARIANCE_FLOOR); m];

    let column = |name: &str, s: usize| -> f64 {
        if let Some(i) = exog_names.iter().position(|n| n == name) {
            exog[i][s]
        } else if let Some((_, c)) = dummy_cols.iter().find(|(d, _)| d == name) {
            c[s]
        } else {
            f64::NAN
        }
    };
    let mut xrow = vec![0.0; spec.variance_regressors.len()];
    for s in 0..total {
        for (slot, term) in xrow.iter_mut().zip(&spec.variance_regressors) {
            *slot = if s < term.lag {
                0.0
            } else if term.column == spec.dependent {
                y[s - term.lag]
            } else {
                column(&term.column, s - term.lag)
            };
        }
        let lag_e = |i: usize| if i <= s { e[s - i] } else { pre_e[m + s - i] };
        let lag_h = |i: usize| if i <= s { h[s - i] } else { pre_h[m + s - i] };
        let raw = next_variance(&family, params, lag_e, lag_h, &xrow);
        if !raw.is_finite() {
            return Err(Error::Explosive(persistence));
        }
        h[s] = raw.max(VARIANCE_FLOOR);

        let z: f64 = StandardNormal.sample(&mut rng);
        e[s] = z * h[s].sqrt();
        let mut mean = 0.0;
        let mut k = 0;
        if spec.include_constant_mean {
            mean += params.b[0];
            k = 1;
        }
        for (term, coef) in spec.mean_regressors.iter().zip(&params.b[k..]) {
            let v = if s < term.lag {
                0.0
            } else if term.column == spec.dependent {
                y[s - term.lag]
            } else {
                column(&term.column, s - term.lag)
            };
            mean += coef * v;
        }
        y[s] = mean + e[s];
    }

    let mut panel = Panel::new(dates.clone())?;
    panel.add_column(spec.dependent.clone(), y[burn_in..].to_vec())?;
    for (name, col) in exog_names.iter().zip(&exog) {
        panel.add_column(name.clone(), col[burn_in..].to_vec())?;
    }
    panel.add_calendar_dummies()?;

    // state before the first usable row of the estimation sample
    let first = burn_in + spec.max_lag();
    let presample = Presample {
        residuals: (0..m).map(|i| if first + i >= m { e[first + i - m] } else { pre_e[i + first] }).collect(),
        variances: (0..m).map(|i| if first + i >= m { h[first + i - m] } else { pre_h[i + first] }).collect(),
    };

    Ok(Simulation {
        returns: ReturnSeries::new(dates, y[burn_in..].to_vec())?,
        residuals: e[burn_in..].to_vec(),
        variances: h[burn_in..].to_vec(),
        presample,
        exogenous: exog_names,
        panel,
    })
}
