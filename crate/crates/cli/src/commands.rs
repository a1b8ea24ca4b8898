use std::path::Path;

use condvol::diagnostics::{diagnose, stationarity_report, DiagnosticsReport, Stationarity};
use condvol::estimation::{fit, Coefficient, FitOptions};
use condvol::ingest::{
    align, build_dummies, read_csv, write_csv, ColumnTransform, CsvSchema, Panel, APRIL_2000, MONDAY, SEPTEMBER_2001,
};
use condvol::model::{simulate_with, Presample, SimulationOptions};
use condvol::series_stats::{acf, acf_band, summarize, SummaryStats};
use condvol::{FamilyKind, ModelSpec, ParamVector, Term, VarianceFamily};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::Action;
use crate::config::{InputKind, RunConfig};
use crate::report::{num, opt_num, slug, write, Table};
use crate::svg::{acf_chart, line_chart};
use crate::CliError;

const DUMMIES: [&str; 3] = [MONDAY, APRIL_2000, SEPTEMBER_2001];

pub fn execute(action: Action, cfg: &RunConfig) -> Result<(), CliError> {
    match action {
        Action::Describe => describe(cfg),
        Action::Fit => fit_all(cfg),
        Action::Simulate => simulate(cfg),
    }
}

#[derive(Serialize)]
struct Manifest<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    seed: u64,
    data_sha256: Option<String>,
    config: &'a RunConfig,
    results: R,
}

fn write_manifest<R: Serialize>(
    cfg: &RunConfig,
    command: &'static str,
    data_sha256: Option<String>,
    results: R,
) -> Result<(), CliError> {
    let m = Manifest {
        tool: "condvol",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        data_sha256,
        config: cfg,
        results,
    };
    let json = serde_json::to_string_pretty(&m).map_err(|e| CliError::Data(e.to_string()))?;
    write(&cfg.out.join("manifest.json"), &(json + "\n"))
}

fn create_out(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Config(format!("{}: {e}", cfg.out.display())))
}

fn require_series(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.series.is_empty() {
        return Err(CliError::Config("--series is required".into()));
    }
    Ok(())
}

struct Loaded {
    panel: Panel,
    dropped: usize,
    sha256: String,
}

fn data_err(path: &Path) -> impl Fn(condvol::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

/// Reads the data file, keeps the `needed` columns, converts them per the
/// config, aligns, and appends any referenced calendar dummy the file lacks.
fn load(cfg: &RunConfig, needed: &[String]) -> Result<Loaded, CliError> {
    let path = cfg.data_path()?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let sha256 = format!("{:x}", Sha256::digest(&bytes));
    let mut table = read_csv(bytes.as_slice(), &CsvSchema::default()).map_err(data_err(path))?;

    for name in needed {
        if !table.columns.contains_key(name) && !DUMMIES.contains(&name.as_str()) {
            return Err(CliError::Config(format!("column `{name}` not found in {}", path.display())));
        }
    }
    for name in cfg.diff.iter().chain(&cfg.raw) {
        if !table.columns.contains_key(name) {
            return Err(CliError::Config(format!("column `{name}` not found in {}", path.display())));
        }
    }
    table.columns.retain(|k, _| needed.contains(k));
    let names: Vec<String> = table.columns.keys().cloned().collect();
    for name in &names {
        let transform = if cfg.diff.contains(name) {
            ColumnTransform::Difference
        } else if cfg.raw.contains(name) || cfg.input == InputKind::Returns {
            ColumnTransform::AsIs
        } else {
            ColumnTransform::Returns(cfg.returns)
        };
        table.transform_column(name, transform).map_err(|e| CliError::Data(format!("column `{name}`: {e}")))?;
    }
    let aligned = align(&[table]).map_err(data_err(path))?;
    let mut panel = aligned.panel;
    let missing: Vec<&str> =
        DUMMIES.iter().copied().filter(|d| needed.iter().any(|n| n == d) && panel.column(d).is_err()).collect();
    if !missing.is_empty() {
        for (name, col) in build_dummies(panel.dates()) {
            if missing.contains(&name.as_str()) {
                panel.add_column(name, col)?;
            }
        }
    }
    Ok(Loaded { panel, dropped: aligned.dropped, sha256 })
}

/// Regressor terms for one dependent series. A bare name from the series
/// roster enters at lag 1, any other bare name at lag 0; `L<k>.name` is
/// explicit. With `skip_own`, a bare reference to `own` is dropped.
fn terms(items: &[String], roster: &[String], own: &str, skip_own: bool) -> Result<Vec<Term>, CliError> {
    let mut out = Vec::new();
    for item in items {
        let t = Term::parse(item, usize::MAX).map_err(|e| CliError::Config(e.to_string()))?;
        if t.lag != usize::MAX {
            out.push(t);
            continue;
        }
        if skip_own && t.column == own {
            continue;
        }
        let lag = usize::from(roster.contains(&t.column));
        out.push(Term::lagged(t.column, lag));
    }
    Ok(out)
}

fn build_spec(cfg: &RunConfig, series: &str) -> Result<ModelSpec, CliError> {
    let family = VarianceFamily::new(cfg.family, 1, 1)?;
    let spec = ModelSpec::new(series, family)
        .with_mean(terms(&cfg.mean_x, &cfg.series, series, false)?)
        .with_variance(terms(&cfg.var_x, &cfg.series, series, true)?);
    spec.validate().map_err(|e| CliError::Config(format!("model for `{series}`: {e}")))?;
    Ok(spec)
}

fn columns_for(specs: &[ModelSpec]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for s in specs {
        for c in std::iter::once(&s.dependent)
            .chain(s.mean_regressors.iter().map(|t| &t.column))
            .chain(s.variance_regressors.iter().map(|t| &t.column))
        {
            if !cols.contains(c) {
                cols.push(c.clone());
            }
        }
    }
    cols
}

#[derive(Serialize)]
struct DescribeResult<'a> {
    rows: usize,
    dropped: usize,
    band: f64,
    series: Vec<SeriesSummary<'a>>,
}

#[derive(Serialize)]
struct SeriesSummary<'a> {
    name: &'a str,
    stats: SummaryStats,
}

fn describe(cfg: &RunConfig) -> Result<(), CliError> {
    require_series(cfg)?;
    let loaded = load(cfg, &cfg.series)?;
    let panel = &loaded.panel;
    create_out(cfg)?;
    let d = cfg.decimals;

    let mut table = Table::new([
        "series", "n", "min", "q1", "median", "q3", "max", "mean", "std_dev", "skewness", "kurtosis", "ks_stat", "ks_p",
    ]);
    let mut stats = Vec::new();
    let labels: Vec<String> = panel.dates().iter().map(|d| d.to_string()).collect();
    let band = acf_band(panel.len());
    for name in &cfg.series {
        let series = panel.series(name)?;
        let s = summarize(&series).map_err(|e| CliError::Data(format!("series `{name}`: {e}")))?;
        table.push(vec![
            name.clone(),
            s.n.to_string(),
            num(s.min, d),
            num(s.q1, d),
            num(s.median, d),
            num(s.q3, d),
            num(s.max, d),
            num(s.mean, d),
            num(s.std_dev, d),
            opt_num(s.skewness_excess, d),
            opt_num(s.kurtosis_excess, d),
            opt_num(s.ks_statistic, d),
            opt_num(s.ks_p_value, d),
        ]);

        let profile = acf(series.values(), cfg.lags).map_err(|e| CliError::Data(format!("series `{name}`: {e}")))?;
        let mut acf_table = Table::new(["lag", "acf", "band"]);
        for (k, r) in profile.correlations.iter().enumerate() {
            acf_table.push(vec![(k + 1).to_string(), r.to_string(), profile.band.to_string()]);
        }
        let stem = slug(name);
        write(&cfg.out.join(format!("acf_{stem}.csv")), &acf_table.to_csv())?;
        write(
            &cfg.out.join(format!("{stem}_returns.svg")),
            &line_chart(&format!("{name}: daily returns"), "return (%)", &labels, series.values()),
        )?;
        write(
            &cfg.out.join(format!("{stem}_acf.svg")),
            &acf_chart(&format!("{name}: autocorrelation of returns"), &profile.correlations, profile.band),
        )?;
        stats.push(SeriesSummary { name, stats: s });
    }
    write(&cfg.out.join("summary.csv"), &table.to_csv())?;
    write(
        &cfg.out.join("summary.md"),
        &format!(
            "# Descriptive statistics of daily returns\n\n{}\nSkewness and kurtosis are excess values; ks_stat is the Kolmogorov-Smirnov normality statistic. {} observations.\n",
            table.to_markdown(),
            panel.len()
        ),
    )?;
    let result = DescribeResult { rows: panel.len(), dropped: loaded.dropped, band, series: stats };
    write_manifest(cfg, "describe", Some(loaded.sha256), result)?;
    println!("described {} series over {} rows into {}", cfg.series.len(), panel.len(), cfg.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SeriesFit {
    series: String,
    family: FamilyKind,
    converged: bool,
    loglik: f64,
    n_obs: usize,
    iterations: usize,
    restarts: usize,
    evaluations: usize,
    covariance_singular: bool,
    stationarity: Stationarity,
    coefficients: Vec<Coefficient>,
    robust_cov: Vec<Vec<f64>>,
    diagnostics: DiagnosticsReport,
}

#[derive(Serialize)]
struct FitReport {
    rows: usize,
    dropped: usize,
    fits: Vec<SeriesFit>,
}

fn split_name(name: &str) -> (&'static str, String) {
    if name == "const" {
        ("mean", "constant".into())
    } else if let Some(r) = name.strip_prefix("mean:") {
        ("mean", r.into())
    } else if let Some(r) = name.strip_prefix("var:") {
        ("variance", r.into())
    } else {
        ("variance", name.into())
    }
}

fn coefficient_tables(coefs: &[Coefficient], d: usize) -> (Table, Table, Table) {
    let header = ["panel", "term", "coefficient", "std_error", "z_stat", "p_value", "fixed"];
    let mut csv = Table::new(header);
    let mut mean = Table::new(["term", "coefficient", "std. error", "p-value"]);
    let mut var = Table::new(["term", "coefficient", "std. error", "p-value"]);
    for c in coefs {
        let (panel, term) = split_name(&c.name);
        csv.push(vec![
            panel.into(),
            term.clone(),
            num(c.estimate, d),
            opt_num(c.std_error, d),
            opt_num(c.z_stat, d),
            opt_num(c.p_value, d),
            c.fixed.to_string(),
        ]);
        let star = if c.p_value.is_some_and(|p| p < 0.05) { "*" } else { "" };
        let row = vec![
            term,
            format!("{}{star}", num(c.estimate, d)),
            c.std_error.map_or("(fixed)".into(), |s| num(s, d)),
            opt_num(c.p_value, d),
        ];
        if panel == "mean" { mean.push(row) } else { var.push(row) }
    }
    (csv, mean, var)
}

fn fit_all(cfg: &RunConfig) -> Result<(), CliError> {
    require_series(cfg)?;
    let specs: Vec<ModelSpec> = cfg.series.iter().map(|s| build_spec(cfg, s)).collect::<Result<_, _>>()?;
    for name in cfg.fix.keys() {
        if !specs.iter().any(|s| s.param_names().contains(name)) {
            return Err(CliError::Config(format!("--fix: no parameter named `{name}`")));
        }
    }
    let loaded = load(cfg, &columns_for(&specs))?;
    let panel = &loaded.panel;
    create_out(cfg)?;
    let d = cfg.decimals;

    let mut diag_table = Table::new([
        "series", "q_stat", "q_p", "q2_stat", "q2_p", "arch_stat", "arch_p", "sign_t", "sign_p", "nsize_t", "nsize_p",
        "psize_t", "psize_p", "joint_stat", "joint_p", "lags",
    ]);
    let mut fits = Vec::new();
    let mut unconverged = Vec::new();
    for spec in &specs {
        let name = &spec.dependent;
        let names = spec.param_names();
        let opts = FitOptions {
            seed: cfg.seed,
            fixed: cfg.fix.iter().filter(|(k, _)| names.contains(k)).map(|(k, v)| (k.clone(), *v)).collect(),
            ..Default::default()
        };
        let r = fit(spec, panel, &opts).map_err(|e| match CliError::from(e) {
            CliError::NotConverged(_) => CliError::NotConverged(vec![name.clone()]),
            CliError::Data(m) => CliError::Data(format!("fit of `{name}`: {m}")),
            other => other,
        })?;
        let diag = diagnose(&r.standardized_residuals, cfg.lags)
            .map_err(|e| CliError::Data(format!("diagnostics of `{name}`: {e}")))?;
        let stationarity = stationarity_report(spec.family.kind, &r.params);
        if !r.converged {
            unconverged.push(name.clone());
        }

        let stem = slug(name);
        let (csv, mean, var) = coefficient_tables(&r.coefficients, d);
        write(&cfg.out.join(format!("coefficients_{stem}.csv")), &csv.to_csv())?;
        let family = match spec.family.kind {
            FamilyKind::Garch => "GARCH",
            FamilyKind::Gjr => "GJR-GARCH",
            FamilyKind::LogEgarch => "EGARCH",
        };
        let md = format!(
            "# {name}: {family}(1,1)\n\n\
             Observations {}, log-likelihood {}, persistence {}{}, converged {}.\n\n\
             ## Panel A: conditional mean\n\n{}\n## Panel B: conditional variance\n\n{}\n\
             Bollerslev-Wooldridge robust standard errors; * marks significance at the 5% level.\n",
            r.n_obs,
            num(r.loglik, d),
            num(stationarity.persistence, d),
            if stationarity.stationary { "" } else { " (not stationary)" },
            r.converged,
            mean.to_markdown(),
            var.to_markdown(),
        );
        write(&cfg.out.join(format!("coefficients_{stem}.md")), &md)?;

        let dates = &panel.dates()[spec.max_lag()..];
        let mut vol = Table::new(["date", "conditional_vol"]);
        let mut std_res = Table::new(["date", "standardized"]);
        for ((date, v), z) in dates.iter().zip(r.conditional_vol()).zip(&r.standardized_residuals) {
            vol.push(vec![date.to_string(), v.to_string()]);
            std_res.push(vec![date.to_string(), z.to_string()]);
        }
        write(&cfg.out.join(format!("volatility_{stem}.csv")), &vol.to_csv())?;
        write(&cfg.out.join(format!("standardized_{stem}.csv")), &std_res.to_csv())?;

        diag_table.push(vec![
            name.clone(),
            num(diag.q_stat, d),
            num(diag.q_p, d),
            num(diag.q2_stat, d),
            num(diag.q2_p, d),
            num(diag.arch_stat, d),
            num(diag.arch_p, d),
            num(diag.sign_t, d),
            num(diag.sign_p, d),
            num(diag.nsize_t, d),
            num(diag.nsize_p, d),
            num(diag.psize_t, d),
            num(diag.psize_p, d),
            num(diag.joint_stat, d),
            num(diag.joint_p, d),
            diag.lags_used.to_string(),
        ]);
        println!(
            "{name}: loglik {:.4}, persistence {:.4}, converged {}",
            r.loglik, stationarity.persistence, r.converged
        );
        fits.push(SeriesFit {
            series: name.clone(),
            family: spec.family.kind,
            converged: r.converged,
            loglik: r.loglik,
            n_obs: r.n_obs,
            iterations: r.iterations,
            restarts: r.restarts,
            evaluations: r.evaluations,
            covariance_singular: r.covariance_singular,
            stationarity,
            coefficients: r.coefficients,
            robust_cov: r.robust_cov,
            diagnostics: diag,
        });
    }
    write(&cfg.out.join("diagnostics.csv"), &diag_table.to_csv())?;
    write(
        &cfg.out.join("diagnostics.md"),
        &format!(
            "# Diagnostics of standardized residuals\n\n{}\nQ and Q2 are Ljung-Box statistics on the residuals and their squares, ARCH is the LM test, \
             sign/nsize/psize are Engle-Ng t-statistics and joint is their LM test; all at {} lags where applicable.\n",
            diag_table.to_markdown(),
            cfg.lags
        ),
    )?;
    write_manifest(cfg, "fit", Some(loaded.sha256), FitReport { rows: panel.len(), dropped: loaded.dropped, fits })?;
    if !unconverged.is_empty() && !cfg.allow_nonconverged {
        return Err(CliError::NotConverged(unconverged));
    }
    Ok(())
}

fn default_params(spec: &ModelSpec) -> ParamVector {
    let mut p = ParamVector::zeros(spec);
    match spec.family.kind {
        FamilyKind::Garch => {
            p.omega = 0.05;
            p.alpha = vec![0.10];
            p.beta = vec![0.85];
        }
        FamilyKind::Gjr => {
            p.omega = 0.05;
            p.alpha = vec![0.05];
            p.gamma = vec![0.10];
            p.beta = vec![0.85];
        }
        FamilyKind::LogEgarch => {
            p.alpha = vec![0.10];
            p.beta = vec![0.95];
        }
    }
    p
}

#[derive(Serialize)]
struct NamedValue {
    name: String,
    value: f64,
}

#[derive(Serialize)]
struct Truth<'a> {
    series: &'a str,
    spec: &'a ModelSpec,
    params: Vec<NamedValue>,
    persistence: f64,
    rows: usize,
    burn_in: usize,
    presample: Presample,
    dates: Vec<String>,
    variances: Vec<f64>,
    residuals: Vec<f64>,
}

fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let series = match cfg.series.as_slice() {
        [] => "y".to_string(),
        [one] => one.clone(),
        _ => return Err(CliError::Config("simulate takes a single --series name".into())),
    };
    let roster = vec![series.clone()];
    let family = VarianceFamily::new(cfg.family, 1, 1)?;
    let spec = ModelSpec::new(series.as_str(), family)
        .with_mean(terms(&cfg.mean_x, &roster, &series, false)?)
        .with_variance(terms(&cfg.var_x, &roster, &series, true)?);
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let names = spec.param_names();
    let mut flat = default_params(&spec).to_flat();
    for (k, v) in &cfg.params {
        let i = names
            .iter()
            .position(|n| n == k)
            .ok_or_else(|| CliError::Config(format!("--param: no parameter named `{k}` (have {})", names.join(", "))))?;
        flat[i] = *v;
    }
    let params = ParamVector::from_flat(&spec, &flat)?;
    let opts = SimulationOptions { allow_explosive: cfg.allow_explosive, start_date: None };
    let sim = simulate_with(&spec, &params, cfg.rows, cfg.burn_in, cfg.seed, &opts)?;

    create_out(cfg)?;
    let mut table = sim.panel.to_table();
    table.columns.retain(|k, _| !sim.panel.is_dummy(k));
    let path = cfg.out.join("simulated.csv");
    write_csv(&table, &path).map_err(|e| CliError::Data(e.to_string()))?;

    let truth = Truth {
        series: &series,
        spec: &spec,
        params: names.iter().zip(&flat).map(|(n, v)| NamedValue { name: n.clone(), value: *v }).collect(),
        persistence: params.persistence(spec.family.kind),
        rows: cfg.rows,
        burn_in: cfg.burn_in,
        presample: sim.presample.clone(),
        dates: sim.panel.dates().iter().map(|d| d.to_string()).collect(),
        variances: sim.variances.clone(),
        residuals: sim.residuals.clone(),
    };
    let json = serde_json::to_string_pretty(&truth).map_err(|e| CliError::Data(e.to_string()))?;
    write(&cfg.out.join("truth.json"), &(json + "\n"))?;
    let sha = format!("{:x}", Sha256::digest(std::fs::read(&path).map_err(|e| CliError::Data(e.to_string()))?));
    write_manifest(cfg, "simulate", None, serde_json::json!({ "rows": cfg.rows, "simulated_sha256": sha }))?;
    println!("simulated {} rows of `{series}` into {}", cfg.rows, path.display());
    Ok(())
}
