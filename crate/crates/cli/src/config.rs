//! INI-style experiment configuration: flat `key = value` lines under
//! `[section]` headers, with `#` or `;` comments. No structured-format
//! dependency; trivially parseable from any language.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use thiserror::Error;

use adiabatic_sde::dephasing::DephasingModel;
use adiabatic_sde::linalg::{CMatrix, OperatorFamily};
use adiabatic_sde::sde::{Scheme, SchemeConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config invalid: {key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("config file {0}: {1}")]
    Io(PathBuf, std::io::Error),
}

impl ConfigError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Which built-in (or table-driven) model to run.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Rotating { e1: f64, gamma1: f64 },
    ThreeLevel,
    Table { h_table: PathBuf, gamma_table: PathBuf },
}

/// Fully parsed and validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub commutation_tol: f64,
    pub epsilons: Vec<f64>,
    pub steps_per_epsilon: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub expansion_order: u32,
    pub gap_tol: f64,
    pub scheme: Scheme,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::Rotating { e1: 1.0, gamma1: 1.0 },
            commutation_tol: 1e-10,
            epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            steps_per_epsilon: 200,
            n_paths: 4000,
            seed: 2024,
            expansion_order: 1,
            gap_tol: 1e-6,
            scheme: Scheme::Exponential,
            workers: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::from_str_source(&text)
    }

    pub fn from_str_source(text: &str) -> Result<Self, ConfigError> {
        let mut section = String::new();
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_lowercase();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::invalid(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got {line:?}"),
                ));
            };
            let full_key = if section.is_empty() {
                key.trim().to_lowercase()
            } else {
                format!("{section}.{}", key.trim().to_lowercase())
            };
            entries.insert(full_key, value.trim().to_string());
        }
        Self::from_entries(entries)
    }

    fn from_entries(entries: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut known = Vec::new();

        let get = |k: &str| entries.get(k).map(|s| s.as_str());

        macro_rules! track {
            ($k:expr) => {
                known.push($k.to_string())
            };
        }

        // [model]
        track!("model.name");
        let model_name = get("model.name").unwrap_or("rotating-dephasing");
        track!("model.e1");
        track!("model.gamma1");
        track!("model.h_table");
        track!("model.gamma_table");
        cfg.model = match model_name {
            "rotating-dephasing" => ModelSpec::Rotating {
                e1: parse_f64(get("model.e1"), "model.e1", 1.0)?,
                gamma1: parse_f64(get("model.gamma1"), "model.gamma1", 1.0)?,
            },
            "three-level" => ModelSpec::ThreeLevel,
            "table" => {
                let h = get("model.h_table").ok_or_else(|| {
                    ConfigError::invalid("model.h_table", "required for model.name = table")
                })?;
                let g = get("model.gamma_table").ok_or_else(|| {
                    ConfigError::invalid("model.gamma_table", "required for model.name = table")
                })?;
                ModelSpec::Table {
                    h_table: PathBuf::from(h),
                    gamma_table: PathBuf::from(g),
                }
            }
            other => {
                return Err(ConfigError::invalid(
                    "model.name",
                    format!("unknown model {other:?} (rotating-dephasing | three-level | table)"),
                ))
            }
        };
        track!("model.commutation_tol");
        cfg.commutation_tol = parse_f64(
            get("model.commutation_tol"),
            "model.commutation_tol",
            cfg.commutation_tol,
        )?;

        // [run]
        track!("run.epsilons");
        if let Some(v) = get("run.epsilons") {
            cfg.epsilons = parse_epsilons(v)?;
        }
        track!("run.steps_per_epsilon");
        cfg.steps_per_epsilon = parse_usize(
            get("run.steps_per_epsilon"),
            "run.steps_per_epsilon",
            cfg.steps_per_epsilon,
        )?;
        track!("run.n_paths");
        cfg.n_paths = parse_usize(get("run.n_paths"), "run.n_paths", cfg.n_paths)?;
        track!("run.seed");
        cfg.seed = parse_u64(get("run.seed"), "run.seed", cfg.seed)?;
        track!("run.expansion_order");
        cfg.expansion_order = parse_u64(
            get("run.expansion_order"),
            "run.expansion_order",
            cfg.expansion_order as u64,
        )? as u32;
        track!("run.gap_tol");
        cfg.gap_tol = parse_f64(get("run.gap_tol"), "run.gap_tol", cfg.gap_tol)?;
        track!("run.scheme");
        cfg.scheme = match get("run.scheme").unwrap_or("exponential") {
            "exponential" => Scheme::Exponential,
            "euler_maruyama" | "euler-maruyama" => Scheme::EulerMaruyama,
            other => {
                return Err(ConfigError::invalid(
                    "run.scheme",
                    format!("unknown scheme {other:?} (exponential | euler_maruyama)"),
                ))
            }
        };
        track!("run.workers");
        cfg.workers = parse_usize(get("run.workers"), "run.workers", cfg.workers)?;

        // [output]
        track!("output.dir");
        if let Some(v) = get("output.dir") {
            cfg.out_dir = PathBuf::from(v);
        }

        for key in entries.keys() {
            if !known.contains(key) {
                return Err(ConfigError::invalid(key, "unknown key"));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.epsilons.is_empty() {
            return Err(ConfigError::invalid("epsilons", "need at least one value"));
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e <= 1.0) {
                return Err(ConfigError::invalid(
                    "epsilons",
                    format!("epsilon {e} outside (0, 1]"),
                ));
            }
        }
        if self.steps_per_epsilon < 50 {
            return Err(ConfigError::invalid(
                "steps_per_epsilon",
                format!("{} < 50", self.steps_per_epsilon),
            ));
        }
        if self.n_paths < 1 {
            return Err(ConfigError::invalid("n_paths", "must be >= 1"));
        }
        if self.expansion_order > 3 {
            return Err(ConfigError::invalid(
                "expansion_order",
                format!("{} > 3", self.expansion_order),
            ));
        }
        if !(self.gap_tol > 0.0) {
            return Err(ConfigError::invalid("gap_tol", "must be positive"));
        }
        Ok(())
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            scheme: self.scheme,
            steps_per_epsilon: self.steps_per_epsilon,
            tol_growth: 10.0,
        }
    }

    /// Steps for one epsilon under the grid constraint `M >= K / eps`.
    pub fn steps_for(&self, eps: f64) -> usize {
        (self.steps_per_epsilon as f64 / eps).ceil() as usize
    }

    pub fn build_model(&self) -> Result<DephasingModel<f64>, ConfigError> {
        match &self.model {
            ModelSpec::Rotating { e1, gamma1 } => Ok(DephasingModel::rotating(*e1, *gamma1)),
            ModelSpec::ThreeLevel => Ok(DephasingModel::three_level()),
            ModelSpec::Table { h_table, gamma_table } => {
                let h = family_from_table(h_table)?;
                let g = family_from_table(gamma_table)?;
                DephasingModel::new(h, g, self.commutation_tol).map_err(|e| {
                    ConfigError::invalid("model", format!("table model rejected: {e}"))
                })
            }
        }
    }
}

fn parse_f64(v: Option<&str>, key: &str, default: f64) -> Result<f64, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| ConfigError::invalid(key, format!("not a number: {s:?}"))),
    }
}

fn parse_usize(v: Option<&str>, key: &str, default: usize) -> Result<usize, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| ConfigError::invalid(key, format!("not an integer: {s:?}"))),
    }
}

fn parse_u64(v: Option<&str>, key: &str, default: u64) -> Result<u64, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| ConfigError::invalid(key, format!("not an integer: {s:?}"))),
    }
}

pub fn parse_epsilons(v: &str) -> Result<Vec<f64>, ConfigError> {
    let out: Result<Vec<f64>, _> = v
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    out.map_err(|_| ConfigError::invalid("epsilons", format!("not a CSV list of numbers: {v:?}")))
}

/// Read a matrix table: whitespace-separated rows `s re im re im ...`,
/// row-major square matrices; linear interpolation in `s`.
fn family_from_table(path: &Path) -> Result<OperatorFamily<f64>, ConfigError> {
    let key = format!("table {}", path.display());
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.into(), e))?;
    let mut grid: Vec<(f64, Vec<Complex<f64>>)> = Vec::new();
    let mut dim = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Result<Vec<f64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
        let nums = nums.map_err(|_| {
            ConfigError::invalid(&key, format!("line {}: non-numeric entry", lineno + 1))
        })?;
        if nums.len() < 3 || (nums.len() - 1) % 2 != 0 {
            return Err(ConfigError::invalid(
                &key,
                format!("line {}: expected `s` plus 2*d^2 entries", lineno + 1),
            ));
        }
        let d2 = (nums.len() - 1) / 2;
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d != d2 {
            return Err(ConfigError::invalid(
                &key,
                format!("line {}: {d2} entries is not a square matrix", lineno + 1),
            ));
        }
        if dim == 0 {
            dim = d;
        } else if dim != d {
            return Err(ConfigError::invalid(
                &key,
                format!("line {}: dimension changed from {dim} to {d}", lineno + 1),
            ));
        }
        let entries: Vec<Complex<f64>> = nums[1..]
            .chunks_exact(2)
            .map(|c| Complex::new(c[0], c[1]))
            .collect();
        grid.push((nums[0], entries));
    }
    if grid.len() < 2 {
        return Err(ConfigError::invalid(&key, "need at least two grid rows"));
    }
    for w in grid.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(ConfigError::invalid(&key, "s column must be increasing"));
        }
    }
    if grid[0].0 > 0.0 || grid.last().unwrap().0 < 1.0 {
        return Err(ConfigError::invalid(&key, "s column must cover [0, 1]"));
    }

    let d = dim;
    Ok(OperatorFamily::from_fn(d, 1, move |s: f64| {
        // binary search for the bracketing rows
        let idx = grid.partition_point(|(x, _)| *x <= s).min(grid.len() - 1);
        let (lo, hi) = if idx == 0 { (0, 1) } else { (idx - 1, idx) };
        let (s0, ref a) = grid[lo];
        let (s1, ref b) = grid[hi];
        let w = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
        CMatrix::from_fn(d, |i, j| {
            let x = a[i * d + j];
            let y = b[i * d + j];
            x + (y - x).scale(w)
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrip() {
        let cfg = ExperimentConfig::from_str_source("").unwrap();
        assert_eq!(cfg.epsilons.len(), 4);
        assert_eq!(cfg.steps_per_epsilon, 200);
    }

    #[test]
    fn parses_sections_and_overrides() {
        let text = r#"
[model]
name = three-level

[run]
epsilons = 0.2, 0.1
n_paths = 12
seed = 7

[output]
dir = /tmp/somewhere
"#;
        let cfg = ExperimentConfig::from_str_source(text).unwrap();
        assert!(matches!(cfg.model, ModelSpec::ThreeLevel));
        assert_eq!(cfg.epsilons, vec![0.2, 0.1]);
        assert_eq!(cfg.n_paths, 12);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/somewhere"));
    }

    #[test]
    fn invalid_epsilon_names_key() {
        let text = "[run]\nepsilons = 2.0\n";
        let err = ExperimentConfig::from_str_source(text).unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = "[run]\nbananas = 3\n";
        let err = ExperimentConfig::from_str_source(text).unwrap_err();
        assert!(err.to_string().contains("bananas"));
    }

    #[test]
    fn small_k_rejected() {
        let text = "[run]\nsteps_per_epsilon = 10\n";
        let err = ExperimentConfig::from_str_source(text).unwrap_err();
        assert!(err.to_string().contains("steps_per_epsilon"));
    }

    #[test]
    fn order_cap_enforced() {
        let text = "[run]\nexpansion_order = 4\n";
        let err = ExperimentConfig::from_str_source(text).unwrap_err();
        assert!(err.to_string().contains("expansion_order"));
    }
}
