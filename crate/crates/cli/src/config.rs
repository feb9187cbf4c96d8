//! Per-command settings: defaults, overlaid by an optional flat JSON file,
//! overlaid by flags.

use std::path::Path;

use changeattr::datagen::{DelayedSpikeConfig, SwitchFeatureConfig};
use changeattr::{Method, Substitution};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Reads a config file. It must hold a single JSON object; keys that the
/// running command does not use are ignored.
pub fn load_file(path: &Path) -> Result<Map<String, Value>> {
    if !path.exists() {
        return Err(CliError::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match serde_json::from_str(&text).map_err(changeattr::Error::from)? {
        Value::Object(map) => Ok(map),
        _ => Err(changeattr::Error::Schema(format!(
            "{}: config must be a JSON object",
            path.display()
        ))
        .into()),
    }
}

/// `file` with every flag that was given written over it, deserialized into `C`.
pub fn merge<C: DeserializeOwned, F: Serialize>(file: &Map<String, Value>, flags: &F) -> Result<C> {
    let mut merged = file.clone();
    match serde_json::to_value(flags).map_err(changeattr::Error::from)? {
        Value::Object(given) => merged.extend(given),
        _ => unreachable!("flag structs serialize to objects"),
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Dataset {
    SwitchFeature,
    DelayedSpike,
}

impl Dataset {
    pub fn name(&self) -> &'static str {
        match self {
            Dataset::SwitchFeature => "switch-feature",
            Dataset::DelayedSpike => "delayed-spike",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Recurrent,
    Mlp,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SplitName {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataConfig {
    pub dataset: Dataset,
    /// Output stem; defaults to the dataset name.
    pub name: Option<String>,
    pub num_series: usize,
    pub seq_len: usize,
    pub window: usize,
    pub num_features: usize,
    pub split: [f64; 3],
    pub seed: u64,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            dataset: Dataset::SwitchFeature,
            name: None,
            num_series: 100,
            seq_len: 100,
            window: 50,
            num_features: 3,
            split: [0.6, 0.2, 0.2],
            seed: 0,
        }
    }
}

impl GenDataConfig {
    pub fn stem(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.dataset.name().to_string())
    }

    pub fn switch_feature(&self) -> SwitchFeatureConfig {
        SwitchFeatureConfig {
            num_series: self.num_series,
            seq_len: self.seq_len,
            window: self.window,
            seed: self.seed,
            ..SwitchFeatureConfig::default()
        }
    }

    pub fn delayed_spike(&self) -> DelayedSpikeConfig {
        DelayedSpikeConfig {
            num_series: self.num_series,
            seq_len: self.seq_len,
            num_features: self.num_features,
            seed: self.seed,
            ..DelayedSpikeConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCmdConfig {
    /// Dataset stem under `out/data`, or a path to a `.jsonl` file.
    pub data: String,
    /// Output stem; defaults to the dataset stem.
    pub name: Option<String>,
    pub model: ModelKind,
    pub window: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        Self {
            data: "switch-feature".into(),
            name: None,
            model: ModelKind::Recurrent,
            window: 50,
            hidden: 16,
            epochs: 20,
            learning_rate: 0.05,
            batch_size: 32,
            l2: 0.0,
            seed: 0,
        }
    }
}

/// Shared by `attribute` and `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttribCmdConfig {
    pub data: String,
    /// Model stem under `out/models`, or a path; defaults to the dataset stem.
    pub model: Option<String>,
    pub method: String,
    pub n_samples: usize,
    pub offset: usize,
    pub gap: usize,
    pub targets_per_series: usize,
    pub split: SplitName,
    pub k: usize,
    pub substitution: Substitution,
    pub seed: u64,
}

impl Default for AttribCmdConfig {
    fn default() -> Self {
        Self {
            data: "switch-feature".into(),
            model: None,
            method: "swing".into(),
            n_samples: 50,
            offset: 1,
            gap: 1,
            targets_per_series: 5,
            split: SplitName::Test,
            k: 50,
            substitution: Substitution::ForwardFill,
            seed: 0,
        }
    }
}

impl AttribCmdConfig {
    pub fn method(&self) -> Result<Method> {
        Ok(self.method.parse::<Method>()?)
    }

    pub fn model_stem(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.data)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportCmdConfig {
    /// Methods to join; empty means every summary found.
    pub methods: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[derive(Serialize)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        method: Option<String>,
    }

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = obj(json!({"k": 10, "method": "rbs", "offset": 2, "unrelated": true}));
        let flags = Flags {
            k: Some(7),
            method: None,
        };
        let c: AttribCmdConfig = merge(&file, &flags).unwrap();
        assert_eq!(c.k, 7);
        assert_eq!(c.method, "rbs");
        assert_eq!(c.offset, 2);
        assert_eq!(c.gap, 1);
        assert_eq!(c.n_samples, 50);
    }

    #[test]
    fn wrong_type_is_config_error() {
        let file = obj(json!({"k": "many"}));
        let flags = Flags {
            k: None,
            method: None,
        };
        let e = merge::<AttribCmdConfig, _>(&file, &flags).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
    }

    #[test]
    fn unknown_method_has_its_own_code() {
        let c = AttribCmdConfig {
            method: "lime".into(),
            ..AttribCmdConfig::default()
        };
        assert_eq!(
            c.method().unwrap_err().exit_code(),
            crate::error::code::UNKNOWN_METHOD
        );
    }
}
