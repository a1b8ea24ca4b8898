//! CSV ingestion, price-to-return transforms, calendar alignment and the
//! calendar dummy regressors.
//!
//! The interchange format is UTF-8 comma-separated text with a header row,
//! ISO `YYYY-MM-DD` dates in the first column and numeric cells elsewhere. An
//! empty cell is a missing observation.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series_stats::ReturnSeries;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

pub const MONDAY: &str = "monday";
pub const APRIL_2000: &str = "april_2000";
pub const SEPTEMBER_2001: &str = "september_2001";

/// A parsed CSV file: dates plus named columns of possibly-missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub dates: Vec<NaiveDate>,
    pub columns: IndexMap<String, Vec<Option<f64>>>,
}

/// Columns a file must provide. An empty schema accepts any header.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub required: Vec<String>,
}

impl CsvSchema {
    pub fn requiring<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { required: names.into_iter().map(Into::into).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnMethod {
    /// `100 * (P_t / P_{t-1} - 1)`
    #[default]
    Simple,
    /// `100 * ln(P_t / P_{t-1})`
    Log,
}

/// How a raw column becomes a stationary regressor or dependent series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnTransform {
    /// Column already holds returns (or any stationary quantity).
    AsIs,
    /// Price level converted to percent returns.
    Returns(ReturnMethod),
    /// Level series (rates, price indices): forward-fill gaps, then first difference.
    Difference,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawTable> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
        .clone();
    if headers.len() < 2 {
        return Err(Error::Csv { line: 1, message: "expected a date column and at least one data column".into() });
    }
    let mut columns: IndexMap<String, Vec<Option<f64>>> = IndexMap::new();
    for name in headers.iter().skip(1) {
        let name = name.trim().to_string();
        if columns.insert(name.clone(), Vec::new()).is_some() {
            return Err(Error::DuplicateName(name));
        }
    }
    for req in &schema.required {
        if !columns.contains_key(req) {
            return Err(Error::UnknownColumn(req.clone()));
        }
    }

    let mut dates = Vec::new();
    let mut seen = HashSet::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::Csv { line, message: e.to_string() })?;
        let raw_date = record.get(0).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT)
            .map_err(|_| Error::Csv { line, message: format!("malformed date `{raw_date}`") })?;
        if !seen.insert(date) {
            return Err(Error::Csv { line, message: format!("duplicate date {date}") });
        }
        dates.push(date);
        for (cell, col) in record.iter().skip(1).zip(columns.values_mut()) {
            let cell = cell.trim();
            if cell.is_empty() {
                col.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Csv { line, message: format!("non-numeric cell `{cell}`") })?;
                col.push(Some(v));
            }
        }
    }
    Ok(RawTable { dates, columns })
}

pub fn write_csv(table: &RawTable, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv_to(table, file)
}

/// Writes full-precision cells; `read_csv` of the output reproduces every cell.
pub fn write_csv_to<W: Write>(table: &RawTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["date".to_string()];
    header.extend(table.columns.keys().cloned());
    w.write_record(&header).map_err(io)?;
    for (i, d) in table.dates.iter().enumerate() {
        let mut rec = vec![d.format(DATE_FORMAT).to_string()];
        rec.extend(table.columns.values().map(|c| c[i].map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Rows reordered by ascending date.
    pub fn sorted(&self) -> RawTable {
        let mut idx: Vec<usize> = (0..self.dates.len()).collect();
        idx.sort_by_key(|&i| self.dates[i]);
        RawTable {
            dates: idx.iter().map(|&i| self.dates[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|(k, v)| (k.clone(), idx.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }

    /// Applies `transform` to column `name` in date order. The first row of a
    /// transformed column becomes missing, as does any row whose inputs are.
    pub fn transform_column(&mut self, name: &str, transform: ColumnTransform) -> Result<()> {
        if transform == ColumnTransform::AsIs {
            return if self.columns.contains_key(name) { Ok(()) } else { Err(Error::UnknownColumn(name.into())) };
        }
        if self.dates.windows(2).any(|w| w[0] >= w[1]) {
            *self = self.sorted();
        }
        let col = self.columns.get_mut(name).ok_or_else(|| Error::UnknownColumn(name.into()))?;
        let mut out = vec![None; col.len()];
        match transform {
            ColumnTransform::Returns(method) => {
                if let Some((i, v)) = col.iter().enumerate().find_map(|(i, v)| v.filter(|x| *x <= 0.0).map(|x| (i, x))) {
                    return Err(Error::NonPositive { index: i, value: v });
                }
                for t in 1..col.len() {
                    if let (Some(p0), Some(p1)) = (col[t - 1], col[t]) {
                        out[t] = Some(price_return(p0, p1, method));
                    }
                }
            }
            ColumnTransform::Difference => {
                let mut last: Option<f64> = None;
                let mut filled = Vec::with_capacity(col.len());
                for v in col.iter() {
                    if v.is_some() {
                        last = *v;
                    }
                    filled.push(last);
                }
                for t in 1..filled.len() {
                    if let (Some(a), Some(b)) = (filled[t - 1], filled[t]) {
                        out[t] = Some(b - a);
                    }
                }
            }
            ColumnTransform::AsIs => unreachable!(),
        }
        *col = out;
        Ok(())
    }
}

fn price_return(p0: f64, p1: f64, method: ReturnMethod) -> f64 {
    match method {
        ReturnMethod::Simple => 100.0 * (p1 / p0 - 1.0),
        ReturnMethod::Log => 100.0 * (p1 / p0).ln(),
    }
}

/// Converts a price path into percent returns; the output is one shorter and
/// dated at the later price of each pair.
pub fn to_returns(dates: &[NaiveDate], prices: &[f64], method: ReturnMethod) -> Result<ReturnSeries> {
    if dates.len() != prices.len() {
        return Err(Error::LengthMismatch { left: dates.len(), right: prices.len() });
    }
    if prices.len() < 3 {
        // ReturnSeries needs two returns
        return Err(Error::TooShort { needed: 3, got: prices.len() });
    }
    if let Some(i) = prices.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::NonPositive { index: i, value: prices[i] });
    }
    let values = prices.windows(2).map(|w| price_return(w[0], w[1], method)).collect();
    ReturnSeries::new(dates[1..].to_vec(), values)
}

/// Date-aligned, fully observed matrix of named series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    dates: Vec<NaiveDate>,
    columns: IndexMap<String, Vec<f64>>,
    dummies: Vec<String>,
}

impl Panel {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnorderedDates(i + 1));
        }
        Ok(Self { dates, columns: IndexMap::new(), dummies: Vec::new() })
    }

    pub fn with_column(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.add_column(name, values)?;
        Ok(self)
    }

    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.dates.len() {
            return Err(Error::LengthMismatch { left: self.dates.len(), right: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if self.columns.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    /// Adds the Monday and crash-month indicators built from the panel dates.
    pub fn add_calendar_dummies(&mut self) -> Result<()> {
        for (name, col) in build_dummies(&self.dates) {
            self.add_column(name.clone(), col)?;
            self.dummies.push(name);
        }
        Ok(())
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns.get(name).map(Vec::as_slice).ok_or_else(|| Error::UnknownColumn(name.into()))
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn dummy_names(&self) -> &[String] {
        &self.dummies
    }

    pub fn is_dummy(&self, name: &str) -> bool {
        self.dummies.iter().any(|d| d == name)
    }

    pub fn series(&self, name: &str) -> Result<ReturnSeries> {
        ReturnSeries::new(self.dates.clone(), self.column(name)?.to_vec())
    }

    pub fn to_table(&self) -> RawTable {
        RawTable {
            dates: self.dates.clone(),
            columns: self.columns.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| Some(*x)).collect())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub panel: Panel,
    /// Rows of the date intersection dropped because some cell was missing.
    pub dropped: usize,
}

/// Inner-joins tables on date and drops every row with a missing cell.
pub fn align(tables: &[RawTable]) -> Result<Aligned> {
    if tables.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let mut rows: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    let mut names: Vec<String> = Vec::new();
    for (ti, table) in tables.iter().enumerate() {
        for name in table.columns.keys() {
            if names.contains(name) {
                return Err(Error::DuplicateName(name.clone()));
            }
            names.push(name.clone());
        }
        let keep: HashSet<NaiveDate> = table.dates.iter().copied().collect();
        if ti == 0 {
            for &d in &table.dates {
                rows.insert(d, Vec::new());
            }
        } else {
            rows.retain(|d, _| keep.contains(d));
        }
        let position: BTreeMap<NaiveDate, usize> = table.dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        for (d, cells) in rows.iter_mut() {
            let i = position[d];
            cells.extend(table.columns.values().map(|c| c[i]));
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let total = rows.len();
    let complete: Vec<(NaiveDate, Vec<f64>)> = rows
        .into_iter()
        .filter_map(|(d, cells)| cells.into_iter().collect::<Option<Vec<f64>>>().map(|c| (d, c)))
        .collect();
    let dropped = total - complete.len();
    if complete.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let mut panel = Panel::new(complete.iter().map(|(d, _)| *d).collect())?;
    for (j, name) in names.into_iter().enumerate() {
        panel.add_column(name, complete.iter().map(|(_, c)| c[j]).collect())?;
    }
    Ok(Aligned { panel, dropped })
}

/// Monday, April-2000 and September-2001 indicator columns.
///
/// The crash dummies cover every date in the named calendar month.
pub fn build_dummies(dates: &[NaiveDate]) -> Vec<(String, Vec<f64>)> {
    let ind = |f: &dyn Fn(&NaiveDate) -> bool| dates.iter().map(|d| if f(d) { 1.0 } else { 0.0 }).collect();
    vec![
        (MONDAY.to_string(), ind(&|d| d.weekday() == Weekday::Mon)),
        (APRIL_2000.to_string(), ind(&|d| d.year() == 2000 && d.month() == 4)),
        (SEPTEMBER_2001.to_string(), ind(&|d| d.year() == 2001 && d.month() == 9)),
    ]
}

/// Consecutive weekdays starting at `start` (or the next weekday after it).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}
