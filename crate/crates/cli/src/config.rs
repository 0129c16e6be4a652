//! Flat key-value run configuration: a TOML file of scalar/list keys, then
//! `key=value` overrides (overrides win), deserialized into [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use paft_core::experiment::ExperimentConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    /// JSONL training data; synthetic data from `family` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// JSONL test data; synthetic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_dataset: Option<PathBuf>,
    /// Partitioned prompt set; generated offline when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts: Option<PathBuf>,
}

fn parse_value(raw: &str) -> toml::Value {
    // `k=v` parses `v` as a TOML value; anything that does not parse is a string.
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn known_keys() -> Vec<String> {
    let v = serde_json::to_value(ExperimentConfig::default()).expect("config serializes");
    let mut keys: Vec<String> = v.as_object().map(|m| m.keys().cloned().collect()).unwrap_or_default();
    keys.extend(["dataset", "test_dataset", "prompts"].map(String::from));
    keys
}

impl RunConfig {
    /// Loads `path` (if any) and applies `overrides` of the form `key=value`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for kv in overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("override {kv:?} is not key=value")))?;
            table.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        if let Some((k, _)) = table.iter().find(|(_, v)| v.is_table()) {
            return Err(CliError::Invalid(format!("config must be flat; {k:?} is a table")));
        }
        // `flatten` swallows unknown keys, so they are checked by hand.
        let known = known_keys();
        if let Some(k) = table.keys().find(|k| !known.contains(k)) {
            return Err(CliError::Invalid(format!("unknown config key {k:?}")));
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.experiment.family().map_err(|e| CliError::Invalid(e.to_string()))?;
        for p in [&self.dataset, &self.test_dataset, &self.prompts].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::Invalid(format!("referenced path {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the effective config (sorted keys).
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// First 16 hex characters of SHA-256 over the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to toml")
    }
}

/// `<out_dir>/<command>-<config hash>`; created if missing.
pub fn run_dir(out_dir: &Path, command: &str, cfg: &RunConfig, extra: &str) -> Result<PathBuf, CliError> {
    let mut h = Sha256::new();
    h.update(cfg.canonical_json().as_bytes());
    h.update([0]);
    h.update(extra.as_bytes());
    let tag: String = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
    let dir = out_dir.join(format!("{command}-{tag}"));
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}
