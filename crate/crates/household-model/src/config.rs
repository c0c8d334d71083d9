//! Flat `key = value` model configuration files.
//!
//! Required keys: `gamma1`..`gamma7`, `w`, `tau`, `w_next`, `R_next`,
//! `Rp_next`. Optional tolerance overrides: `tol_budget` (relative budget
//! tolerance) and `tol_fd_step` (relative finite-difference step).
//! Comments start with `#`; unknown, duplicate, and missing keys are
//! errors that name the key and line.

use crate::model::{EconomyParams, PreferenceWeights, BUDGET_TOL_REL};
use crate::sensitivity::DEFAULT_FD_STEP;
use std::path::Path;
use thiserror::Error;

const REQUIRED_KEYS: [&str; 12] = [
    "gamma1", "gamma2", "gamma3", "gamma4", "gamma5", "gamma6", "gamma7", "w", "tau", "w_next",
    "R_next", "Rp_next",
];
const OPTIONAL_KEYS: [&str; 2] = ["tol_budget", "tol_fd_step"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("missing required key '{key}'")]
    MissingKey { key: &'static str },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value '{value}' for key '{key}'")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: expected 'key = value'")]
    MissingSeparator { line: usize },
}

/// Parsed model configuration with tolerance overrides applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub prefs: PreferenceWeights,
    pub econ: EconomyParams,
    /// Relative budget tolerance (`tol_budget`, default 1e-10).
    pub budget_tol: f64,
    /// Relative finite-difference step (`tol_fd_step`, default 1e-6).
    pub fd_step: f64,
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut seen: Vec<(String, f64)> = Vec::new();

        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::MissingSeparator { line })?;
            let key = key.trim();
            let value = value.trim();
            if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if seen.iter().any(|(k, _)| k == key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            let parsed: f64 = value.parse().map_err(|_| ConfigError::InvalidValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            })?;
            if !parsed.is_finite() {
                return Err(ConfigError::InvalidValue {
                    line,
                    key: key.to_string(),
                    value: value.to_string(),
                });
            }
            seen.push((key.to_string(), parsed));
        }

        let get = |key: &'static str| -> Result<f64, ConfigError> {
            seen.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or(ConfigError::MissingKey { key })
        };
        let optional = |key: &str, default: f64| -> f64 {
            seen.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .unwrap_or(default)
        };

        Ok(ModelConfig {
            prefs: PreferenceWeights {
                gamma1: get("gamma1")?,
                gamma2: get("gamma2")?,
                gamma3: get("gamma3")?,
                gamma4: get("gamma4")?,
                gamma5: get("gamma5")?,
                gamma6: get("gamma6")?,
                gamma7: get("gamma7")?,
            },
            econ: EconomyParams {
                wage: get("w")?,
                tau: get("tau")?,
                wage_next: get("w_next")?,
                interest: get("R_next")?,
                pension_interest: get("Rp_next")?,
            },
            budget_tol: optional("tol_budget", BUDGET_TOL_REL),
            fd_step: optional("tol_fd_step", DEFAULT_FD_STEP),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL_ONES: &str = "\
# all-ones instance
gamma1 = 1
gamma2 = 1
gamma3 = 1
gamma4 = 1
gamma5 = 1
gamma6 = 1
gamma7 = 1
w = 1
tau = 0.1   # per-child cost
w_next = 1
R_next = 1
Rp_next = 1
";

    #[test]
    fn parses_the_all_ones_config() {
        let cfg = ModelConfig::parse(ALL_ONES).unwrap();
        assert_eq!(cfg.prefs, PreferenceWeights::uniform(1.0));
        assert_eq!(cfg.econ.tau, 0.1);
        assert_eq!(cfg.budget_tol, BUDGET_TOL_REL);
        assert_eq!(cfg.fd_step, DEFAULT_FD_STEP);
    }

    #[test]
    fn tolerance_overrides_apply() {
        let text = format!("{ALL_ONES}tol_budget = 1e-8\ntol_fd_step = 1e-5\n");
        let cfg = ModelConfig::parse(&text).unwrap();
        assert_eq!(cfg.budget_tol, 1e-8);
        assert_eq!(cfg.fd_step, 1e-5);
    }

    #[test]
    fn missing_key_is_named() {
        let text = ALL_ONES.replace("tau = 0.1   # per-child cost\n", "");
        match ModelConfig::parse(&text).unwrap_err() {
            ConfigError::MissingKey { key } => assert_eq!(key, "tau"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = format!("{ALL_ONES}gamma8 = 2\n");
        match ModelConfig::parse(&text).unwrap_err() {
            ConfigError::UnknownKey { line, key } => {
                assert_eq!(key, "gamma8");
                assert_eq!(line, 14);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = format!("{ALL_ONES}w = 2\n");
        assert!(matches!(
            ModelConfig::parse(&text).unwrap_err(),
            ConfigError::DuplicateKey { key, .. } if key == "w"
        ));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let text = format!("{ALL_ONES}just words\n");
        assert!(matches!(
            ModelConfig::parse(&text).unwrap_err(),
            ConfigError::MissingSeparator { line: 14 }
        ));
        let text = ALL_ONES.replace("w = 1", "w = money");
        assert!(matches!(
            ModelConfig::parse(&text).unwrap_err(),
            ConfigError::InvalidValue { key, .. } if key == "w"
        ));
        let text = ALL_ONES.replace("w = 1", "w = inf");
        assert!(matches!(
            ModelConfig::parse(&text).unwrap_err(),
            ConfigError::InvalidValue { .. }
        ));
    }
}
