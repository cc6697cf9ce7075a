//! Pipeline configuration: one TOML or JSON file with a section per stage.
//!
//! Every section falls back to its defaults; unknown keys are rejected. The
//! top-level `seed` drives every seeded stage (weight initialization, pooled
//! split, hyperparameter runs), so the per-section seed fields are
//! overwritten by [`PipelineConfig::resolved`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::eval::{HyperSearchConfig, ModelSettings, R2_THRESHOLD};
use crate::models::ModelKind;
use crate::preprocess::PreprocessConfig;

/// Environment variable overriding [`PipelineConfig::seed`].
pub const SEED_ENV: &str = "CRF_SEED";
/// Environment variable overriding [`PipelineConfig::threads`].
pub const THREADS_ENV: &str = "CRF_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report: PathBuf,
    pub table: PathBuf,
    pub fig_dir: PathBuf,
    /// Also render SVG figures next to the CSV plot data.
    pub svg: bool,
    /// Points of the dense contrast grid used for fitted-curve plot data.
    pub plot_points: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            report: "report.json".into(),
            table: "table1.csv".into(),
            fig_dir: "fig_data".into(),
            svg: false,
            plot_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub kinds: Vec<ModelKind>,
    /// Inclusion threshold on per-curve R².
    pub threshold: f64,
    pub preprocess: PreprocessConfig,
    /// Settings for per-curve cross-validation.
    pub models: ModelSettings,
    /// Settings for the pooled supersaturated comparison.
    pub pooled: ModelSettings,
    pub hyper: HyperSearchConfig,
    pub outputs: OutputConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            kinds: ModelKind::ALL.to_vec(),
            threshold: R2_THRESHOLD,
            preprocess: PreprocessConfig::default(),
            models: ModelSettings::default(),
            pooled: ModelSettings::default(),
            hyper: HyperSearchConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

fn parse_env<V: std::str::FromStr>(name: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| CrfError::InvalidConfig(format!("{name} = `{value}` is not a non-negative integer")))
}

impl PipelineConfig {
    /// Parses TOML, or JSON when the path ends in `.json`.
    pub fn from_str_for(text: &str, path: &Path) -> Result<Self> {
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let label = path.display();
        if is_json {
            serde_json::from_str(text).map_err(|e| CrfError::InvalidConfig(format!("{label}: {e}")))
        } else {
            toml::from_str(text).map_err(|e| CrfError::InvalidConfig(format!("{label}: {e}")))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CrfError::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str_for(&text, path)
    }

    /// Applies `CRF_SEED` and `CRF_THREADS` from the given lookup.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = lookup(SEED_ENV) {
            self.seed = parse_env(SEED_ENV, &v)?;
        }
        if let Some(v) = lookup(THREADS_ENV) {
            self.threads = parse_env(THREADS_ENV, &v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(CrfError::InvalidConfig("no model kinds configured".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CrfError::InvalidConfig(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.outputs.plot_points < 2 {
            return Err(CrfError::InvalidConfig("outputs.plot_points must be at least 2".into()));
        }
        self.preprocess.validate()?;
        self.models.validate()?;
        self.pooled.validate()?;
        self.hyper.validate()
    }

    /// Validated copy with the top-level seed pushed into every stage.
    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        let mut c = self.clone();
        c.models = c.models.with_seed(c.seed);
        c.pooled = c.pooled.with_seed(c.seed);
        c.hyper.base_seed = c.seed;
        c.hyper.train.seed = c.seed;
        Ok(c)
    }
}
