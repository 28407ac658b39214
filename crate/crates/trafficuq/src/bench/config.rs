use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::scenario::{ModelKind, UqKind};
use crate::data::SyntheticConfig;
use crate::error::{Error, Result};

/// Where the sensor series come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Generated series; one independent stream per configured sensor id.
    Synthetic {
        days: usize,
        #[serde(default)]
        profile: SyntheticConfig,
    },
    /// One CSV per sensor: `<dir>/<sensor_id>.csv`.
    Csv { dir: PathBuf },
}

fn default_n_estimators() -> usize {
    100
}

fn default_mc_passes() -> usize {
    100
}

fn default_epochs() -> usize {
    20
}

fn default_dropout() -> f64 {
    0.2
}

fn default_mlp_lr() -> f64 {
    1e-3
}

/// Benchmark-run configuration, read from a JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sensors: Vec<String>,
    /// Lag-window sizes ω.
    pub omegas: Vec<usize>,
    /// Forecasting horizons h, in 15-minute steps.
    pub horizons: Vec<usize>,
    /// Weather-feature flag axis.
    pub meteo: Vec<bool>,
    /// Calendar-feature flag axis.
    pub calendar: Vec<bool>,
    pub models: Vec<ModelKind>,
    pub uq_methods: Vec<UqKind>,
    /// Extra (model, technique) pairs to run beyond the `models ×
    /// uq_methods` product. Illegal pairs here are a hard error.
    #[serde(default)]
    pub pairs: Vec<(ModelKind, UqKind)>,
    pub alpha: f64,
    pub seed: u64,
    pub data: DataSource,
    #[serde(default)]
    pub holidays_file: Option<PathBuf>,
    #[serde(default)]
    pub school_periods_file: Option<PathBuf>,
    /// Trees per ensemble.
    #[serde(default = "default_n_estimators")]
    pub n_estimators: usize,
    /// Stochastic forward passes for MC dropout.
    #[serde(default = "default_mc_passes")]
    pub mc_passes: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    #[serde(default = "default_mlp_lr")]
    pub mlp_learning_rate: f64,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("sensors", self.sensors.is_empty()),
            ("omegas", self.omegas.is_empty()),
            ("horizons", self.horizons.is_empty()),
            ("meteo", self.meteo.is_empty()),
            ("calendar", self.calendar.is_empty()),
            ("models", self.models.is_empty()),
            ("uq_methods", self.uq_methods.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("axis `{name}` is empty")));
            }
        }
        if self.omegas.iter().any(|&w| w < 1) {
            return Err(Error::Config("window ω must be >= 1".to_string()));
        }
        if self.horizons.iter().any(|&h| h < 1) {
            return Err(Error::Config("horizon h must be >= 1".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("alpha must be in (0, 1)".to_string()));
        }
        if self.n_estimators < 2 {
            return Err(Error::Config("n_estimators must be >= 2".to_string()));
        }
        if self.mc_passes < 10 {
            return Err(Error::Config("mc_passes must be >= 10".to_string()));
        }
        if let DataSource::Synthetic { days, profile } = &self.data {
            if *days < 1 {
                return Err(Error::Config("synthetic days must be >= 1".to_string()));
            }
            profile.validate()?;
        }
        Ok(())
    }

    /// (model, technique) pairs the user asked for by name.
    pub fn explicit_pairs(&self) -> Vec<(ModelKind, UqKind)> {
        self.pairs.clone()
    }

    /// Canonical JSON serialization of the config, hashed into the run
    /// manifest so a manifest can be matched back to its config.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        format!("{:x}", hasher.finalize())
    }
}
