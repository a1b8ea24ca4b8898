//! Run configuration: command-line flags, optionally layered under the
//! `[[run]]` entries of a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use condvol::{FamilyKind, ReturnMethod};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    /// Columns are price levels, converted to percent returns.
    #[default]
    Prices,
    /// Columns already hold returns.
    Returns,
}

/// Every key optional; the shape of one `[[run]]` table and of the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub data: Option<PathBuf>,
    pub series: Option<Vec<String>>,
    pub family: Option<String>,
    pub mean_x: Option<Vec<String>>,
    pub var_x: Option<Vec<String>>,
    pub lags: Option<usize>,
    pub returns: Option<String>,
    pub input: Option<String>,
    pub diff: Option<Vec<String>>,
    pub raw: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub allow_nonconverged: Option<bool>,
    pub fix: Option<BTreeMap<String, f64>>,
    pub decimals: Option<usize>,
    pub rows: Option<usize>,
    pub burn_in: Option<usize>,
    pub params: Option<BTreeMap<String, f64>>,
    pub allow_explosive: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    run: Vec<PartialConfig>,
}

macro_rules! layer {
    ($self:ident, $under:ident, $($field:ident),*) => {
        PartialConfig { $($field: $self.$field.or_else(|| $under.$field.clone())),* }
    };
}

impl PartialConfig {
    /// Keys set here win; the rest come from `under`.
    pub fn over(self, under: &PartialConfig) -> PartialConfig {
        layer!(
            self, under, data, series, family, mean_x, var_x, lags, returns, input, diff, raw, out, seed,
            allow_nonconverged, fix, decimals, rows, burn_in, params, allow_explosive
        )
    }

    fn rebase(mut self, dir: &Path) -> Self {
        let join = |p: PathBuf| if p.is_relative() { dir.join(p) } else { p };
        self.data = self.data.map(join);
        self.out = self.out.map(join);
        self
    }
}

/// A fully resolved run. Serialized into the manifest and hashed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub series: Vec<String>,
    pub family: FamilyKind,
    pub mean_x: Vec<String>,
    pub var_x: Vec<String>,
    pub lags: usize,
    pub returns: ReturnMethod,
    pub input: InputKind,
    pub diff: Vec<String>,
    pub raw: Vec<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub allow_nonconverged: bool,
    pub fix: BTreeMap<String, f64>,
    pub decimals: usize,
    pub rows: usize,
    pub burn_in: usize,
    pub params: BTreeMap<String, f64>,
    pub allow_explosive: bool,
}

impl RunConfig {
    pub fn resolve(p: PartialConfig) -> Result<Self, CliError> {
        let family = match p.family.as_deref() {
            None => FamilyKind::Garch,
            Some(s) => s.parse().map_err(|_| CliError::Config(format!("unknown family `{s}` (garch, gjr, egarch)")))?,
        };
        let returns = match p.returns.as_deref() {
            None | Some("simple") => ReturnMethod::Simple,
            Some("log") => ReturnMethod::Log,
            Some(s) => return Err(CliError::Config(format!("unknown return method `{s}` (simple, log)"))),
        };
        let input = match p.input.as_deref() {
            None | Some("prices") => InputKind::Prices,
            Some("returns") => InputKind::Returns,
            Some(s) => return Err(CliError::Config(format!("unknown input kind `{s}` (prices, returns)"))),
        };
        let lags = p.lags.unwrap_or(condvol::diagnostics::DEFAULT_LAGS);
        if lags == 0 {
            return Err(CliError::Config("--lags must be positive".into()));
        }
        Ok(Self {
            data: p.data,
            series: p.series.unwrap_or_default(),
            family,
            mean_x: p.mean_x.unwrap_or_default(),
            var_x: p.var_x.unwrap_or_default(),
            lags,
            returns,
            input,
            diff: p.diff.unwrap_or_default(),
            raw: p.raw.unwrap_or_default(),
            out: p.out.unwrap_or_else(|| PathBuf::from("condvol-out")),
            seed: p.seed.unwrap_or(0),
            allow_nonconverged: p.allow_nonconverged.unwrap_or(false),
            fix: p.fix.unwrap_or_default(),
            decimals: p.decimals.unwrap_or(3),
            rows: p.rows.unwrap_or(2000),
            burn_in: p.burn_in.unwrap_or(500),
            params: p.params.unwrap_or_default(),
            allow_explosive: p.allow_explosive.unwrap_or(false),
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json))
    }

    pub fn data_path(&self) -> Result<&Path, CliError> {
        self.data.as_deref().ok_or_else(|| CliError::Config("--data is required".into()))
    }
}

/// Reads the `[[run]]` entries of a TOML file. Relative paths inside are
/// taken relative to the file.
pub fn load_runs(path: &Path) -> Result<Vec<PartialConfig>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: ConfigFile = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    if file.run.is_empty() {
        return Err(CliError::Config(format!("{}: no [[run]] entries", path.display())));
    }
    Ok(file.run.into_iter().map(|r| r.rebase(dir)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(PartialConfig::default()).unwrap();
        assert_eq!(c.lags, 24);
        assert_eq!(c.family, FamilyKind::Garch);
        assert_eq!(c.returns, ReturnMethod::Simple);
        assert_eq!(c.decimals, 3);
    }

    #[test]
    fn entry_overrides_flags() {
        let flags = PartialConfig { lags: Some(12), seed: Some(3), ..Default::default() };
        let entry = PartialConfig { lags: Some(6), ..Default::default() };
        let c = RunConfig::resolve(entry.over(&flags)).unwrap();
        assert_eq!((c.lags, c.seed), (6, 3));
    }

    #[test]
    fn bad_values_are_config_errors() {
        let p = PartialConfig { family: Some("figarch".into()), ..Default::default() };
        assert!(matches!(RunConfig::resolve(p), Err(CliError::Config(_))));
        let p = PartialConfig { returns: Some("pct".into()), ..Default::default() };
        assert!(matches!(RunConfig::resolve(p), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::resolve(PartialConfig::default()).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn toml_runs_rebase_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.toml");
        std::fs::write(&path, "[[run]]\ndata = \"d.csv\"\nseries = [\"a\"]\n\n[[run]]\ndata = \"/abs.csv\"\nlags = 5\n").unwrap();
        let runs = load_runs(&path).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].data.as_deref(), Some(dir.path().join("d.csv").as_path()));
        assert_eq!(runs[1].data.as_deref(), Some(Path::new("/abs.csv")));
        std::fs::write(&path, "[[run]]\nbogus = 1\n").unwrap();
        assert!(load_runs(&path).is_err());
    }
}
