//! Run configuration: a TOML file merged with command-line overrides.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetConfig;
use crate::error::{Error, Result};
use crate::hardware::ResistorCatalog;
use crate::training::{TrainConfig, DEFAULT_PRUNE_FRACTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    /// `one-significant-digit`, `e12`, `e24` or `custom:<ohms>,...`.
    pub catalog: String,
    pub grid_step: f64,
    pub readout_noise_sigma: f64,
    pub prune_fraction: f64,
    /// Resistance ceiling used for pruning (ohms).
    pub r_max: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            catalog: ResistorCatalog::OneSignificantDigit.to_string(),
            grid_step: 0.01,
            readout_noise_sigma: 0.0,
            prune_fraction: DEFAULT_PRUNE_FRACTION,
            r_max: 1000e3,
        }
    }
}

impl HardwareConfig {
    pub fn catalog(&self) -> Result<ResistorCatalog> {
        self.catalog.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub trials: usize,
    pub tolerance: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds every random stream (data, split, init, noise) unless a
    /// section sets its own.
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub hardware: HardwareConfig,
    pub validate: ValidateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            dataset: DatasetConfig::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            hardware: HardwareConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        // a top-level seed without section seeds flows down
        let raw: toml::Table =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        let section_has_seed = |name: &str| {
            raw.get(name)
                .and_then(|v| v.as_table())
                .is_some_and(|t| t.contains_key("seed"))
        };
        if !section_has_seed("dataset") {
            cfg.dataset.seed = cfg.seed;
        }
        if !section_has_seed("train") {
            cfg.train.seed = cfg.seed;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Command-line `--seed` wins over every seed in the file.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.dataset.seed = seed;
        self.train.seed = seed;
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
