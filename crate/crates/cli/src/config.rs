use std::path::Path;

use adf_slam::benchmark::{CorruptionSpec, Experiment, ScenarioConfig};
use adf_slam::imu::{VioInitialVariances, DEFAULT_GRAVITY};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    None,
    Swap,
    InitNoise,
}

/// Corruption used by `run-slam`; sweeps take their levels from the grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionConfig {
    pub kind: CorruptionKind,
    pub rho: f64,
    pub init_variance: f64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            kind: CorruptionKind::None,
            rho: 0.0,
            init_variance: 0.0,
        }
    }
}

impl CorruptionConfig {
    pub fn spec(&self) -> CorruptionSpec {
        match self.kind {
            CorruptionKind::None => CorruptionSpec::None,
            CorruptionKind::Swap => CorruptionSpec::Swap { rho: self.rho },
            CorruptionKind::InitNoise => CorruptionSpec::InitNoise {
                variance: self.init_variance,
            },
        }
    }

    pub fn experiment_name(&self) -> &'static str {
        match self.kind {
            CorruptionKind::None => "none",
            CorruptionKind::Swap => Experiment::Swap.name(),
            CorruptionKind::InitNoise => Experiment::InitNoise.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Seeds shared by both sweeps.
    pub seeds: Vec<u64>,
    pub swap_levels: Vec<f64>,
    pub init_noise_levels: Vec<f64>,
    /// Worker threads; 0 uses every available core.
    pub parallelism: usize,
    pub record_timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seeds: (1..=20).collect(),
            swap_levels: Experiment::Swap.default_levels(),
            init_noise_levels: Experiment::InitNoise.default_levels(),
            parallelism: 0,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuConfig {
    pub gravity: [f64; 3],
    /// Accelerometer white-noise density (m/s²/√Hz).
    pub accel_noise_density: f64,
    /// Gyroscope white-noise density (rad/s/√Hz).
    pub gyro_noise_density: f64,
    pub initial_variances: VioInitialVariances,
}

impl Default for ImuConfig {
    fn default() -> Self {
        Self {
            gravity: DEFAULT_GRAVITY,
            accel_noise_density: 2e-2,
            gyro_noise_density: 2e-3,
            initial_variances: VioInitialVariances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub scenario: ScenarioConfig,
    pub corruption: CorruptionConfig,
    pub sweep: SweepConfig,
    pub imu: ImuConfig,
}

impl AppConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: adf_slam::FilterError| CliError::Config(e.to_string());
        self.scenario.validate().map_err(cfg)?;
        CorruptionSpec::Swap {
            rho: self.corruption.rho,
        }
        .validate()
        .map_err(|e| CliError::Config(format!("corruption.rho: {e}")))?;
        CorruptionSpec::InitNoise {
            variance: self.corruption.init_variance,
        }
        .validate()
        .map_err(|e| CliError::Config(format!("corruption.init_variance: {e}")))?;
        for &rho in &self.sweep.swap_levels {
            Experiment::Swap
                .corruption(rho)
                .validate()
                .map_err(|e| CliError::Config(format!("sweep.swap_levels: {e}")))?;
        }
        for &v in &self.sweep.init_noise_levels {
            Experiment::InitNoise
                .corruption(v)
                .validate()
                .map_err(|e| CliError::Config(format!("sweep.init_noise_levels: {e}")))?;
        }
        if self.sweep.seeds.is_empty() {
            return Err(CliError::Config("sweep.seeds must not be empty".into()));
        }
        for (name, v) in [
            ("imu.accel_noise_density", self.imu.accel_noise_density),
            ("imu.gyro_noise_density", self.imu.gyro_noise_density),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.imu.gravity.iter().any(|g| !g.is_finite()) {
            return Err(CliError::Config("imu.gravity must be finite".into()));
        }
        Ok(())
    }
}

/// Where an effective parameter value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Override,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::File => "config",
            Source::Override => "override",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: AppConfig,
    /// Every leaf parameter as `(dotted.path, value, source)`, sorted.
    pub parameters: Vec<(String, Value, Source)>,
}

fn leaf_paths(value: &Value, prefix: &str, out: &mut Vec<(String, Value)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                leaf_paths(v, &path, out);
            }
        }
        _ => out.push((prefix.to_string(), value.clone())),
    }
}

fn has_path(value: &Value, path: &str) -> bool {
    let mut cur = value;
    for part in path.split('.') {
        match cur.get(part) {
            Some(next) => cur = next,
            None => return false,
        }
    }
    true
}

/// Resolves an override key to a dotted path. Plain names match the unique
/// leaf (or object) with that final segment.
fn resolve_key(defaults: &Value, key: &str) -> Result<String, CliError> {
    if key.contains('.') {
        return if has_path(defaults, key) {
            Ok(key.to_string())
        } else {
            Err(CliError::Config(format!("unknown parameter `{key}`")))
        };
    }
    let mut candidates = Vec::new();
    fn walk(v: &Value, prefix: &str, key: &str, out: &mut Vec<String>) {
        if let Value::Object(map) = v {
            for (k, child) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                if k == key {
                    out.push(path.clone());
                }
                walk(child, &path, key, out);
            }
        }
    }
    walk(defaults, "", key, &mut candidates);
    match candidates.len() {
        1 => Ok(candidates.remove(0)),
        0 => Err(CliError::Config(format!("unknown parameter `{key}`"))),
        _ => Err(CliError::Config(format!(
            "ambiguous parameter `{key}`, use one of: {}",
            candidates.join(", ")
        ))),
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        if !cur.get(*part).is_some_and(Value::is_object) {
            cur[*part] = Value::Object(Map::new());
        }
        cur = &mut cur[*part];
    }
    cur[parts[parts.len() - 1]] = value;
}

/// Parses `key=value`; the value is read as JSON, falling back to a string.
pub fn parse_override(raw: &str) -> Result<(String, Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{raw}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!(
            "override `{raw}` has an empty key"
        )));
    }
    let value = value.trim();
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

/// Merges the JSON text with overrides, deserializes and validates.
pub fn load_config_str(text: &str, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let mut user: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
    if !user.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    let defaults = serde_json::to_value(AppConfig::default()).expect("config serializes");
    // deserialize once before overrides so field errors name the file
    serde_json::from_value::<AppConfig>(user.clone())
        .map_err(|e| CliError::Config(format!("config: {e}")))?;
    let file_view = user.clone();

    let mut overridden = Vec::new();
    for raw in overrides {
        let (key, value) = parse_override(raw)?;
        let path = resolve_key(&defaults, &key)?;
        set_path(&mut user, &path, value);
        overridden.push(path);
    }
    let config: AppConfig =
        serde_json::from_value(user).map_err(|e| CliError::Config(format!("override: {e}")))?;
    config.validate()?;

    let effective = serde_json::to_value(&config).expect("config serializes");
    let mut leaves = Vec::new();
    leaf_paths(&effective, "", &mut leaves);
    let parameters = leaves
        .into_iter()
        .map(|(path, v)| {
            let source = if overridden
                .iter()
                .any(|o| path == *o || path.starts_with(&format!("{o}.")))
            {
                Source::Override
            } else if has_path(&file_view, &path) {
                Source::File
            } else {
                Source::Default
            };
            (path, v, source)
        })
        .collect();
    Ok(LoadedConfig { config, parameters })
}

/// Loads `path` (or defaults when absent) and applies overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::io(format!("cannot read config {}", p.display()), e))?,
        None => "{}".to_string(),
    };
    load_config_str(&text, overrides)
}

/// `N` means seeds `1..=N`; a comma-separated list is taken literally.
pub fn parse_seeds(raw: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("--seeds expects N or a comma list, got `{raw}`"));
    let raw = raw.trim();
    if raw.contains(',') {
        let seeds: Vec<u64> = raw
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        if seeds.is_empty() {
            return Err(bad());
        }
        Ok(seeds)
    } else {
        let n: u64 = raw.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((1..=n).collect())
    }
}
