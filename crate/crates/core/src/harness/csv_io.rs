//! Versioned CSV schemas of a run directory.
//!
//! | file | columns |
//! |------|---------|
//! | `train_metrics.csv` | [`MetricsRow`] |
//! | `test_metrics.csv` | [`MetricsRow`] |
//! | `lp_bound.csv` | [`LpRow`] |
//! | `timings.csv` | [`TimingRow`] |
//! | `decisions/seed-<s>.csv` | [`DecisionRow`] |
//! | `transfer-<name>.csv` | [`MetricsRow`] |
//! | `finetune.csv` | [`FinetuneRow`] |
//!
//! Reward columns are period means over the episode. For every metrics row
//! `1 - (empty + critical + wastage + spread + refused) = business_reward`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::agents::ActionSource;
use crate::baselines::lp::LpStatus;
use crate::episode::{DecisionRecord, EpisodeStats};
use crate::error::{Error, Result};

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub episode: usize,
    pub epsilon: f64,
    pub business_reward: f64,
    pub empty: f64,
    pub critical: f64,
    pub wastage: f64,
    pub spread: f64,
    pub refused: f64,
    pub capacity_penalty: f64,
    pub product_reward: f64,
    pub surrogate: f64,
}

impl MetricsRow {
    pub fn new(seed: u64, episode: usize, epsilon: f64, s: &EpisodeStats) -> Self {
        let c = &s.components;
        Self {
            seed,
            episode,
            epsilon,
            business_reward: s.business_reward,
            empty: c.empty,
            critical: c.critical,
            wastage: c.wastage,
            spread: c.spread,
            refused: c.refused,
            capacity_penalty: c.capacity_penalty,
            product_reward: s.product_reward,
            surrogate: s.surrogate,
        }
    }

    /// `1 - Σ components - business_reward`; zero up to rounding.
    pub fn reconstruction_error(&self) -> f64 {
        1.0 - (self.empty + self.critical + self.wastage + self.spread + self.refused) - self.business_reward
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub seed: u64,
    pub window: String,
    pub status: LpStatus,
    pub periods: usize,
    pub bound: Option<f64>,
    pub replay_reward: Option<f64>,
    pub replay_surrogate: Option<f64>,
    pub iterations: usize,
}

impl LpRow {
    /// `"DNF"` when the solver ran out of budget, the bound otherwise.
    pub fn display_bound(&self) -> String {
        match (self.status.did_not_finish(), self.bound) {
            (true, _) => "DNF".into(),
            (false, Some(b)) => format!("{b:.4}"),
            (false, None) => format!("{:?}", self.status).to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub seed: u64,
    pub phase: String,
    pub episode: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub inventory: f64,
    pub order: f64,
    pub replenishment: f64,
    pub source: Option<ActionSource>,
    pub gvf_wastage: Option<f64>,
    pub gvf_stockout: Option<f64>,
    pub gvf_depletion: Option<f64>,
}

impl From<&DecisionRecord> for DecisionRow {
    fn from(d: &DecisionRecord) -> Self {
        Self {
            inventory: d.inventory,
            order: d.order,
            replenishment: d.replenishment,
            source: d.source,
            gvf_wastage: d.gvf.map(|g| g[0]),
            gvf_stockout: d.gvf.map(|g| g[1]),
            gvf_depletion: d.gvf.map(|g| g[2]),
        }
    }
}

impl From<&DecisionRow> for DecisionRecord {
    fn from(r: &DecisionRow) -> Self {
        let gvf = match (r.gvf_wastage, r.gvf_stockout, r.gvf_depletion) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        Self {
            inventory: r.inventory,
            order: r.order,
            replenishment: r.replenishment,
            gvf,
            source: r.source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneRow {
    pub modification: String,
    pub algorithm: String,
    pub seed: u64,
    pub episode: usize,
    pub business_reward: f64,
    pub empty: f64,
    pub critical: f64,
    pub wastage: f64,
    pub spread: f64,
    pub refused: f64,
    pub capacity_penalty: f64,
    pub product_reward: f64,
}

impl FinetuneRow {
    pub fn new(modification: &str, algorithm: &str, seed: u64, episode: usize, s: &EpisodeStats) -> Self {
        let c = &s.components;
        Self {
            modification: modification.to_string(),
            algorithm: algorithm.to_string(),
            seed,
            episode,
            business_reward: s.business_reward,
            empty: c.empty,
            critical: c.critical,
            wastage: c.wastage,
            spread: c.spread,
            refused: c.refused,
            capacity_penalty: c.capacity_penalty,
            product_reward: s.product_reward,
        }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| wrap(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| wrap(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| wrap(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| wrap(path, e))).collect()
}

fn wrap(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}
