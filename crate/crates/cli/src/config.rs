//! Flat `key = value` configuration files.
//!
//! Lines are `key = value` pairs; `#` starts a comment anywhere; blank
//! lines are skipped. Keys outside the schema are rejected so typos fail
//! loudly. Efficiency values accept either a scalar or a linear grid
//! written `start:stop:steps` with at least two steps.

use std::collections::BTreeMap;

use crate::error::{CliError, CliResult};

/// Every key any scenario understands.
const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "d_a",
    "d_b",
    "state",
    "psi_choice",
    "effects",
    "eta_plus",
    "eta_minus",
    "nbar",
    "trials",
    "seed",
    "noise",
    "count_mode",
    "out",
];

#[derive(Debug, Clone)]
pub struct Config {
    map: BTreeMap<String, String>,
    pub scenario: String,
}

pub fn parse_config(text: &str) -> CliResult<Config> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!(
                "line {}: expected `key = value`, got `{line}`",
                no + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::config(format!("line {}: unknown key `{key}`", no + 1)));
        }
        if value.is_empty() {
            return Err(CliError::config(format!("line {}: empty value for `{key}`", no + 1)));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::config(format!("line {}: duplicate key `{key}`", no + 1)));
        }
    }
    let scenario = map
        .get("scenario")
        .cloned()
        .ok_or_else(|| CliError::config("missing required key `scenario`"))?;
    Ok(Config { map, scenario })
}

/// Inclusive linear grid `start:stop:steps`, steps >= 2.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => {
            let v: f64 = parts[0].parse().map_err(|_| format!("bad number `{s}`"))?;
            Ok(vec![v])
        }
        3 => {
            let start: f64 = parts[0]
                .parse()
                .map_err(|_| format!("bad grid start `{}`", parts[0]))?;
            let stop: f64 = parts[1]
                .parse()
                .map_err(|_| format!("bad grid stop `{}`", parts[1]))?;
            let steps: usize = parts[2]
                .parse()
                .map_err(|_| format!("bad grid step count `{}`", parts[2]))?;
            if steps < 2 {
                return Err(format!("grid `{s}` needs at least 2 steps"));
            }
            Ok((0..steps)
                .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
                .collect())
        }
        _ => Err(format!("`{s}` is neither a scalar nor `start:stop:steps`")),
    }
}

impl Config {
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// Overrides one key after parsing; command-line flags use this to
    /// beat the file.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.map.insert(key.to_string(), value.into());
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::config(format!("`{key}` is not an integer: `{s}`"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::config(format!("`{key}` is not an integer: `{s}`"))),
        }
    }

    pub fn grid_or(&self, key: &str, default: f64) -> CliResult<Vec<f64>> {
        match self.raw(key) {
            None => Ok(vec![default]),
            Some(s) => parse_grid(s).map_err(|e| CliError::config(format!("`{key}`: {e}"))),
        }
    }

    /// Shared sanity checks that do not touch the filesystem.
    pub fn validate_common(&self) -> CliResult<()> {
        let d_a = self.usize_or("d_a", 2)?;
        let d_b = self.usize_or("d_b", 2)?;
        if d_a < 2 || d_b < 2 {
            return Err(CliError::config("d_a and d_b must be at least 2"));
        }
        if self.usize_or("trials", 1)? == 0 {
            return Err(CliError::config("trials must be at least 1"));
        }
        if self.u64_or("nbar", 100_000)? == 0 {
            return Err(CliError::config("nbar must be at least 1"));
        }
        for key in ["eta_plus", "eta_minus"] {
            for v in self.grid_or(key, 1.0)? {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(CliError::config(format!("`{key}` value {v} not in (0, 1]")));
                }
            }
        }
        match self.str_or("psi_choice", "default").as_str() {
            "default" | "product" => {}
            other if other.starts_with("file:") => {}
            other => {
                return Err(CliError::config(format!(
                    "psi_choice must be default, product, or file:PATH, got `{other}`"
                )))
            }
        }
        match self.str_or("effects", "max_entangled").as_str() {
            "max_entangled" | "random" => {}
            other if other.starts_with("file:") => {}
            other => {
                return Err(CliError::config(format!(
                    "effects must be max_entangled, random, or file:PATH_A,PATH_B, got `{other}`"
                )))
            }
        }
        match self.str_or("count_mode", "exact").as_str() {
            "exact" | "mc" => {}
            other => {
                return Err(CliError::config(format!(
                    "count_mode must be exact or mc, got `{other}`"
                )))
            }
        }
        Ok(())
    }
}
