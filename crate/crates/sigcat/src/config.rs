//! The run configuration document shared by every subcommand.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sigcat_core::augment::AugmentConfig;
use sigcat_core::model::ModelConfig;
use sigcat_core::preprocess::PreprocessConfig;
use sigcat_core::signal::{SplitSpec, SynthSpec};
use sigcat_core::train::{PipelineConfig, TrainConfig};

use crate::csvio::DataConfig;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Parameters of the synthetic sine dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub length: usize,
    pub noise_std: f64,
    /// Cycles per signal for each class; empty means 3, 7, 11, ...
    pub freqs: Vec<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 2,
            per_class: 100,
            length: 178,
            noise_std: 0.05,
            freqs: Vec::new(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn spec(&self) -> Result<SynthSpec> {
        let class_freqs = if self.freqs.is_empty() {
            (0..self.classes).map(|k| 3.0 + 4.0 * k as f64).collect()
        } else if self.freqs.len() == self.classes {
            self.freqs.clone()
        } else {
            return Err(Error::Usage(format!(
                "{} frequencies given for {} classes",
                self.freqs.len(),
                self.classes
            )));
        };
        Ok(SynthSpec {
            num_per_class: self.per_class,
            length: self.length,
            class_freqs,
            noise_std: self.noise_std,
            seed: self.seed,
        })
    }
}

/// Every knob of a run. Missing keys take defaults; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub data: DataConfig,
    pub split: SplitSpec,
    pub synth: SynthConfig,
    pub preprocess: PreprocessConfig,
    pub augment: AugmentConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            data: DataConfig::default(),
            split: SplitSpec::default(),
            synth: SynthConfig::default(),
            preprocess: PreprocessConfig::default(),
            augment: AugmentConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Usage(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_json(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Writes `config.json` into `dir`.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        let path = dir.join("config.json");
        std::fs::write(&path, self.to_json()).map_err(Error::io(path))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            preprocess: self.preprocess.clone(),
            augment: self.augment.clone(),
            model: self.model.clone(),
            train: self.train.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip_through_json() {
        let mut cfg = RunConfig::default();
        cfg.train.seed = 7;
        cfg.augment.noise_std = 0.125;
        cfg.data.label_map = Some("uci".into());
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        for doc in [
            r#"{"trian": {}}"#,
            r#"{"train": {"batch_sise": 3}}"#,
            r#"{"model": {"stem": {"chanels": 3}}}"#,
            r#"{"schema_version": 2}"#,
            "not json",
        ] {
            let err = RunConfig::from_json(doc).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{doc}: {err}");
        }
    }

    #[test]
    fn synth_frequencies() {
        let s = SynthConfig {
            classes: 3,
            ..SynthConfig::default()
        };
        assert_eq!(s.spec().unwrap().class_freqs, [3.0, 7.0, 11.0]);
        let bad = SynthConfig {
            freqs: vec![1.0],
            ..SynthConfig::default()
        };
        assert!(bad.spec().is_err());
    }
}
