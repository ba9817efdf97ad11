use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{AgentConfig, Variant};
use crate::baselines::lp::Backend;
use crate::baselines::HeuristicConfig;
use crate::env::RewardConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Heuristic,
    Dqn,
    DqnGvf,
    DezDqnGvf,
    LpBound,
}

impl Algorithm {
    pub fn variant(self) -> Option<Variant> {
        match self {
            Algorithm::Dqn => Some(Variant::Dqn),
            Algorithm::DqnGvf => Some(Variant::DqnGvf),
            Algorithm::DezDqnGvf => Some(Variant::DezDqnGvf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Heuristic => "heuristic",
            Algorithm::Dqn => "dqn",
            Algorithm::DqnGvf => "dqn_gvf",
            Algorithm::DezDqnGvf => "dez_dqn_gvf",
            Algorithm::LpBound => "lp_bound",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "heuristic" => Ok(Algorithm::Heuristic),
            "dqn" => Ok(Algorithm::Dqn),
            "dqn_gvf" => Ok(Algorithm::DqnGvf),
            "dez_dqn_gvf" => Ok(Algorithm::DezDqnGvf),
            "lp_bound" => Ok(Algorithm::LpBound),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl From<Variant> for Algorithm {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Dqn => Algorithm::Dqn,
            Variant::DqnGvf => Algorithm::DqnGvf,
            Variant::DezDqnGvf => Algorithm::DezDqnGvf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpConfig {
    pub backend: Backend,
    /// Wall-clock budget per solve; expiry is reported as DNF.
    pub time_limit_secs: Option<f64>,
    pub max_iters: usize,
    /// Also bound the training window, not only the test window.
    pub include_train: bool,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            time_limit_secs: Some(3600.0),
            max_iters: 1_000_000,
            include_train: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneConfig {
    pub episodes: usize,
    pub epsilon: f64,
    /// Multiplier applied to the wastage weight by the wastage modification.
    pub wastage_factor: f64,
    /// Critical level used by the critical modification.
    pub critical_level: f64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            epsilon: 0.1,
            wastage_factor: 4.0,
            critical_level: 0.1,
        }
    }
}

/// One experiment: an algorithm trained and tested on one dataset over a
/// list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset file; relative paths resolve against the config file.
    pub dataset: PathBuf,
    pub algorithm: Algorithm,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_forecast_window")]
    pub forecast_window: usize,
    /// Write per-decision logs of the test evaluation.
    #[serde(default)]
    pub log_decisions: bool,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub heuristic: HeuristicConfig,
    #[serde(default)]
    pub lp: LpConfig,
    #[serde(default)]
    pub finetune: FinetuneConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_episodes() -> usize {
    200
}

fn default_forecast_window() -> usize {
    8
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, algorithm: Algorithm) -> Self {
        Self {
            dataset: dataset.into(),
            algorithm,
            seeds: default_seeds(),
            episodes: default_episodes(),
            forecast_window: default_forecast_window(),
            log_decisions: false,
            reward: RewardConfig::default(),
            agent: AgentConfig::default(),
            heuristic: HeuristicConfig::default(),
            lp: LpConfig::default(),
            finetune: FinetuneConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.forecast_window == 0 {
            return Err(Error::Config("forecast window must be positive".into()));
        }
        if self.reward.alpha < 0.0 || self.reward.wastage_weight < 0.0 {
            return Err(Error::Config("reward weights must be non-negative".into()));
        }
        if let Some(k) = self.reward.critical_override {
            if !(k > 0.0 && k < 1.0) {
                return Err(Error::Config(format!("critical override {k} outside (0,1)")));
            }
        }
        if !(0.0..=1.0).contains(&self.finetune.epsilon) {
            return Err(Error::Config("fine-tune epsilon outside [0,1]".into()));
        }
        self.heuristic.validate()?;
        self.agent.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves the dataset path against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.dataset.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset = dir.join(&cfg.dataset);
            }
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}
