//! Table-shaped summaries across run directories.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::config::Algorithm;
use super::csv_io::{read_rows, MetricsRow};
use super::run::RunOutput;
use crate::error::{Error, Result};

/// Mean and 95% t-interval half-width. The half-width is NaN for fewer than
/// two values.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

/// Share of the training episodes averaged into the training score.
pub const FINAL_FRACTION: f64 = 0.1;

fn final_mean(rows: &[&MetricsRow]) -> f64 {
    let k = ((rows.len() as f64 * FINAL_FRACTION).ceil() as usize).max(1);
    let tail = &rows[rows.len() - k..];
    tail.iter().map(|r| r.business_reward).sum::<f64>() / k as f64
}

/// First episode at which the seed-mean training curve covers 70% of the way
/// from its first value to its final value.
pub fn episodes_to_fraction(curve: &[f64], fraction: f64) -> Option<usize> {
    if curve.len() < 2 {
        return None;
    }
    let k = ((curve.len() as f64 * FINAL_FRACTION).ceil() as usize).max(1);
    let last = curve[curve.len() - k..].iter().sum::<f64>() / k as f64;
    let first = curve[0];
    if last <= first {
        return None;
    }
    let goal = first + fraction * (last - first);
    curve.iter().position(|&v| v >= goal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub dataset: String,
    pub seeds: usize,
    pub train_mean: Option<f64>,
    pub train_ci95: Option<f64>,
    pub test_mean: Option<f64>,
    pub test_ci95: Option<f64>,
    pub episodes_to_70pct: Option<usize>,
    /// `ok`, or `DNF` for LP bounds that ran out of budget.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCell {
    pub algorithm: String,
    pub train_dataset: String,
    pub eval_dataset: String,
    pub mean: Option<f64>,
    pub ci95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub transfer: Vec<TransferCell>,
    pub datasets: Vec<String>,
}

fn opt(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn fmt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

impl Summary {
    pub fn row(&self, algorithm: &str, dataset: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.dataset == dataset)
    }

    pub fn cell(&self, algorithm: &str, train: &str, eval: &str) -> Option<&TransferCell> {
        self.transfer
            .iter()
            .find(|c| c.algorithm == algorithm && c.train_dataset == train && c.eval_dataset == eval)
    }

    /// `algorithm,dataset,seeds,train_mean,train_ci95,test_mean,test_ci95,episodes_to_70pct,status`
    pub fn table_csv(&self) -> String {
        let mut s = String::from("algorithm,dataset,seeds,train_mean,train_ci95,test_mean,test_ci95,episodes_to_70pct,status\n");
        for r in &self.rows {
            let dnf = r.status == "DNF";
            let val = |x: Option<f64>| if dnf { "DNF".to_string() } else { fmt(x) };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.algorithm,
                r.dataset,
                r.seeds,
                val(r.train_mean),
                fmt(r.train_ci95),
                val(r.test_mean),
                fmt(r.test_ci95),
                r.episodes_to_70pct.map_or("-".into(), |e| e.to_string()),
                r.status
            ));
        }
        s
    }

    /// One row per (algorithm, training dataset), one column per evaluation
    /// dataset; `-` where no number exists.
    pub fn transfer_csv(&self) -> String {
        let mut s = String::from("algorithm,train_dataset");
        for d in &self.datasets {
            s.push(',');
            s.push_str(d);
        }
        s.push('\n');
        let keys: BTreeSet<(String, String)> = self
            .transfer
            .iter()
            .map(|c| (c.algorithm.clone(), c.train_dataset.clone()))
            .collect();
        for (alg, train) in keys {
            s.push_str(&format!("{alg},{train}"));
            for d in &self.datasets {
                let v = self.cell(&alg, &train, d).and_then(|c| c.mean);
                s.push(',');
                s.push_str(&fmt(v));
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        for (name, text) in [("summary.csv", self.table_csv()), ("transfer_matrix.csv", self.transfer_csv())] {
            let path = out.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Aggregates completed runs. Runs of the same algorithm on the same dataset
/// must share a config; dataset names must map to one file content.
pub fn summarize(run_dirs: &[PathBuf]) -> Result<Summary> {
    if run_dirs.is_empty() {
        return Err(Error::Empty("run list"));
    }
    let runs: Vec<RunOutput> = run_dirs.iter().map(|d| RunOutput::load(d)).collect::<Result<_>>()?;
    let mut by_name: BTreeMap<&str, &str> = BTreeMap::new();
    let mut by_key: BTreeMap<(Algorithm, &str), &RunOutput> = BTreeMap::new();
    for r in &runs {
        let m = &r.manifest;
        if let Some(prev) = by_name.insert(&m.dataset_name, &m.dataset_sha256) {
            if prev != m.dataset_sha256 {
                return Err(Error::InconsistentRuns(format!(
                    "dataset name `{}` refers to different files",
                    m.dataset_name
                )));
            }
        }
        if let Some(prev) = by_key.insert((m.algorithm, &m.dataset_name), r) {
            if prev.manifest.config_sha256 != m.config_sha256 {
                return Err(Error::InconsistentRuns(format!(
                    "{} and {} run {} on `{}` with different configs",
                    prev.dir.display(),
                    r.dir.display(),
                    m.algorithm.name(),
                    m.dataset_name
                )));
            }
            return Err(Error::InconsistentRuns(format!(
                "{} and {} duplicate {} on `{}`",
                prev.dir.display(),
                r.dir.display(),
                m.algorithm.name(),
                m.dataset_name
            )));
        }
    }

    let mut summary = Summary {
        datasets: by_name.keys().map(|s| s.to_string()).collect(),
        ..Summary::default()
    };
    for ((alg, dataset), run) in &by_key {
        let seeds = &run.manifest.seeds;
        let mut row = SummaryRow {
            algorithm: alg.name().into(),
            dataset: dataset.to_string(),
            seeds: seeds.len(),
            train_mean: None,
            train_ci95: None,
            test_mean: None,
            test_ci95: None,
            episodes_to_70pct: None,
            status: "ok".into(),
        };
        if *alg == Algorithm::LpBound {
            if run.lp.iter().any(|r| r.status.did_not_finish()) {
                row.status = "DNF".into();
            }
            let pick = |w: &str| -> Vec<f64> { run.lp.iter().filter(|r| r.window == w).filter_map(|r| r.bound).collect() };
            let (train, test) = (pick("train"), pick("test"));
            if !train.is_empty() {
                let (m, h) = mean_ci(&train);
                row.train_mean = opt(m);
                row.train_ci95 = opt(h);
            }
            if !test.is_empty() {
                let (m, h) = mean_ci(&test);
                row.test_mean = opt(m);
                row.test_ci95 = opt(h);
            }
            summary.rows.push(row);
            continue;
        }
        let per_seed_train: Vec<f64> = seeds
            .iter()
            .map(|&s| {
                let rows: Vec<&MetricsRow> = run.train.iter().filter(|r| r.seed == s).collect();
                if rows.is_empty() {
                    Err(Error::InconsistentRuns(format!("{}: no training rows for seed {s}", run.dir.display())))
                } else {
                    Ok(final_mean(&rows))
                }
            })
            .collect::<Result<_>>()?;
        let (m, h) = mean_ci(&per_seed_train);
        row.train_mean = opt(m);
        row.train_ci95 = opt(h);
        let test: Vec<f64> = run.test.iter().map(|r| r.business_reward).collect();
        let (m, h) = mean_ci(&test);
        row.test_mean = opt(m);
        row.test_ci95 = opt(h);
        if alg.variant().is_some() {
            let episodes = run.manifest.episodes;
            let curve: Vec<f64> = (0..episodes)
                .map(|e| {
                    let v: Vec<f64> = run.train.iter().filter(|r| r.episode == e).map(|r| r.business_reward).collect();
                    v.iter().sum::<f64>() / v.len().max(1) as f64
                })
                .collect();
            row.episodes_to_70pct = episodes_to_fraction(&curve, 0.7);
        }
        summary.transfer.push(TransferCell {
            algorithm: alg.name().into(),
            train_dataset: dataset.to_string(),
            eval_dataset: dataset.to_string(),
            mean: row.test_mean,
            ci95: row.test_ci95,
        });
        if alg.variant().is_some() {
            for other in summary.datasets.clone() {
                if other == *dataset {
                    continue;
                }
                let path = run.dir.join(format!("transfer-{other}.csv"));
                if !path.exists() {
                    continue;
                }
                let rows: Vec<MetricsRow> = read_rows(&path)?;
                let v: Vec<f64> = rows.iter().map(|r| r.business_reward).collect();
                let (m, h) = mean_ci(&v);
                summary.transfer.push(TransferCell {
                    algorithm: alg.name().into(),
                    train_dataset: dataset.to_string(),
                    eval_dataset: other,
                    mean: opt(m),
                    ci95: opt(h),
                });
            }
        }
        summary.rows.push(row);
    }
    Ok(summary)
}
