//! Flat `key=value` run configuration.

use std::fmt;

use dealer_core::grid::GridSpec;
use dealer_core::model::{ModelParams, SimSchedule};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Where a rejected setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Manifest,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "at line {n}"),
            Origin::Override => write!(f, "in --set"),
            Origin::Manifest => write!(f, "in manifest"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed line {line}: expected key=value")]
    Malformed { line: usize },
    #[error("unknown key {key} {origin}")]
    UnknownKey { key: String, origin: Origin },
    #[error("invalid value '{value}' for {key} {origin}: {reason}")]
    BadValue {
        key: String,
        value: String,
        origin: Origin,
        reason: String,
    },
    #[error("manifest is not valid JSON: {0}")]
    Json(String),
}

/// Fully resolved parameters; field names are the config keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub spread: f64,
    pub sigma2: f64,
    pub u2: f64,
    /// `None` until set; [`Config::dt`] then falls back to the `N`-dependent default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_init: f64,
    pub t_end: f64,
    pub dr: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub seed: u64,
    pub runs: usize,
}

pub const KEYS: [&str; 12] = [
    "N", "L", "sigma2", "u2", "dt", "t_init", "t_end", "dr", "r_min", "r_max", "seed", "runs",
];

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 2,
            spread: 2.0,
            sigma2: 1.0,
            u2: 0.0,
            dt: None,
            t_init: 20.0,
            t_end: 1e4,
            dr: 1e-2,
            r_min: -3.0,
            r_max: 3.0,
            seed: 1,
            runs: 1,
        }
    }
}

fn bad(key: &str, value: &str, origin: &Origin, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        origin: origin.clone(),
        reason: reason.into(),
    }
}

fn parse_float(key: &str, value: &str, origin: &Origin) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| bad(key, value, origin, "not a number"))?;
    if !v.is_finite() {
        return Err(bad(key, value, origin, "must be finite"));
    }
    Ok(v)
}

fn parse_int(key: &str, value: &str, origin: &Origin) -> Result<u64, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(key, value, origin, "not a non-negative integer"))
}

impl Config {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let value = value.trim();
        let o = &origin;
        match key {
            "N" => self.n = parse_int(key, value, o)? as usize,
            "L" => self.spread = parse_float(key, value, o)?,
            "sigma2" => self.sigma2 = parse_float(key, value, o)?,
            "u2" => self.u2 = parse_float(key, value, o)?,
            "dt" => self.dt = Some(parse_float(key, value, o)?),
            "t_init" => self.t_init = parse_float(key, value, o)?,
            "t_end" => self.t_end = parse_float(key, value, o)?,
            "dr" => self.dr = parse_float(key, value, o)?,
            "r_min" => self.r_min = parse_float(key, value, o)?,
            "r_max" => self.r_max = parse_float(key, value, o)?,
            "seed" => self.seed = parse_int(key, value, o)?,
            "runs" => self.runs = parse_int(key, value, o)? as usize,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    origin,
                })
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::BadValue {
                key: assignment.to_string(),
                value: String::new(),
                origin: Origin::Override,
                reason: "expected key=value".into(),
            })?;
        self.set(key.trim(), value, Origin::Override)
    }

    /// Time step, with the `N`-dependent default when unset.
    pub fn dt(&self) -> f64 {
        self.dt
            .unwrap_or_else(|| SimSchedule::<f64>::default_dt(self.n))
    }

    /// Copy with `dt` filled in, as echoed in manifests.
    pub fn resolved(&self) -> Self {
        Self {
            dt: Some(self.dt()),
            ..*self
        }
    }

    /// Copy for a different trader count; an unset `dt` follows the new `N`.
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn params(&self) -> dealer_core::Result<ModelParams<f64>> {
        ModelParams::new(self.n, self.spread, self.sigma2, self.u2)
    }

    pub fn schedule(&self) -> dealer_core::Result<SimSchedule<f64>> {
        SimSchedule::new(self.dt(), self.t_init, self.t_end, self.seed, self.runs)
    }

    pub fn grid(&self) -> dealer_core::Result<GridSpec<f64>> {
        GridSpec::new(self.r_min, self.r_max, self.dr)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self.resolved()).expect("config serializes")
    }
}

/// Parses a config file: `key=value` lines with `#` comments, or a manifest
/// written by a previous run (its `config` object is used).
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    if text.trim_start().starts_with('{') {
        return parse_manifest(text);
    }
    let mut cfg = Config::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Malformed { line: i + 1 })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Malformed { line: i + 1 });
        }
        cfg.set(key, value, Origin::Line(i + 1))?;
    }
    Ok(cfg)
}

fn parse_manifest(text: &str) -> Result<Config, ConfigError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let empty = Map::new();
    let entries = doc
        .get("config")
        .and_then(Value::as_object)
        .unwrap_or(&empty);
    if doc.get("config").is_none() {
        return Err(ConfigError::Json("missing \"config\" object".into()));
    }
    let mut cfg = Config::default();
    for (key, value) in entries {
        let text = match value {
            Value::Number(n) => n.to_string(),
            Value::Null => continue,
            other => {
                return Err(bad(
                    key,
                    &other.to_string(),
                    &Origin::Manifest,
                    "expected a number",
                ));
            }
        };
        cfg.set(key, &text, Origin::Manifest)?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_table_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.u2, 0.0);
        assert_eq!(cfg.dt(), 1e-4);
        assert_eq!(cfg.with_n(8).dt(), 5e-5);
    }

    #[test]
    fn comments_blank_lines_and_spaces() {
        let cfg = parse_config("# header\n\n L = 1 # spread\nsigma2=2\nN=7\nseed=42\n").unwrap();
        assert_eq!(cfg.spread, 1.0);
        assert_eq!(cfg.sigma2, 2.0);
        assert_eq!(cfg.n, 7);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn rejections_name_key_and_line() {
        let e = parse_config("Lx=1").unwrap_err();
        assert_eq!(e.to_string(), "unknown key Lx at line 1");
        let e = parse_config("L=2\nsigma2=abc").unwrap_err();
        assert!(e.to_string().contains("sigma2 at line 2"), "{e}");
        let e = parse_config("L=2\n\njunk").unwrap_err();
        assert_eq!(e, ConfigError::Malformed { line: 3 });
        assert!(parse_config("N=2.5").is_err());
        assert!(parse_config("dt=nan").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = Config::default();
        cfg.apply_override("u2=1").unwrap();
        assert_eq!(cfg.u2, 1.0);
        let e = cfg.apply_override("Lx=1").unwrap_err();
        assert_eq!(e.to_string(), "unknown key Lx in --set");
        assert!(cfg.apply_override("u2").is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let mut cfg = parse_config("N=5\nu2=0.5\nt_end=12.5\nseed=9").unwrap();
        cfg.dt = None;
        let text =
            serde_json::json!({ "subcommand": "simulate", "config": cfg.to_json() }).to_string();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg.resolved());
        let bad = r#"{"config": {"N": 2, "Lx": 1}}"#;
        assert_eq!(
            parse_config(bad).unwrap_err().to_string(),
            "unknown key Lx in manifest"
        );
    }
}
