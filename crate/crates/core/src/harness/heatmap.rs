//! Policy and GVF heatmaps over (inventory, order) bins.
//!
//! Bins are labeled by their upper edge: inventory label 0.2 covers
//! `(0.1, 0.2]`, order label 0.10 covers `(0.05, 0.10]`. Zero falls in the
//! first bin.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::episode::DecisionRecord;
use crate::error::{Error, Result};

pub const INVENTORY_BIN: f64 = 0.1;
pub const ORDER_BIN: f64 = 0.05;
pub const INVENTORY_BINS: usize = 10;
pub const ORDER_BINS: usize = 20;

/// Index of the bin whose upper edge is the first at or above `x`.
pub fn bin_index(x: f64, width: f64, bins: usize) -> usize {
    let mut k = x / width;
    let r = k.round();
    if (k - r).abs() < 1e-9 {
        k = r;
    }
    (k.ceil().max(1.0) as usize - 1).min(bins - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub name: String,
    /// `counts[i][j]`: decisions in inventory bin `i`, order bin `j`.
    pub counts: Vec<Vec<usize>>,
    /// Cell value averaged over seeds that populate the cell; `None` is an
    /// absent cell.
    pub values: Vec<Vec<Option<f64>>>,
}

impl HeatmapGrid {
    pub fn inventory_label(i: usize) -> f64 {
        (i + 1) as f64 * INVENTORY_BIN
    }

    pub fn order_label(j: usize) -> f64 {
        (j + 1) as f64 * ORDER_BIN
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn populated(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_some()).count()
    }

    /// Long-format CSV: `inventory_bin,order_bin,count,value`, `NA` for absent
    /// cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("inventory_bin,order_bin,count,value\n");
        for i in 0..INVENTORY_BINS {
            for j in 0..ORDER_BINS {
                let v = self.values[i][j].map_or("NA".to_string(), |v| v.to_string());
                s.push_str(&format!(
                    "{:.1},{:.2},{},{}\n",
                    Self::inventory_label(i),
                    Self::order_label(j),
                    self.counts[i][j],
                    v
                ));
            }
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(format!("heatmap_{}.csv", self.name));
        std::fs::write(&path, self.to_csv()).map_err(|e| Error::io(&path, e))
    }

    /// Share of adjacent populated order-bin pairs (same inventory bin) whose
    /// value does not decrease with the order bin.
    pub fn monotone_fraction(&self) -> Option<f64> {
        let (mut ok, mut total) = (0usize, 0usize);
        for row in &self.values {
            for pair in row.windows(2) {
                if let (Some(a), Some(b)) = (pair[0], pair[1]) {
                    total += 1;
                    if b >= a - 1e-12 {
                        ok += 1;
                    }
                }
            }
        }
        (total > 0).then(|| ok as f64 / total as f64)
    }
}

/// Policy grid plus, when the logs carry GVF predictions, one grid per GVF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSet {
    pub policy: HeatmapGrid,
    pub gvf: Option<[HeatmapGrid; 3]>,
}

impl HeatmapSet {
    pub fn grids(&self) -> Vec<&HeatmapGrid> {
        let mut v = vec![&self.policy];
        if let Some(g) = &self.gvf {
            v.extend(g.iter());
        }
        v
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.grids().into_iter().try_for_each(|g| g.write(dir))
    }
}

fn grid(name: &str, logs: &[Vec<DecisionRecord>], value: impl Fn(&DecisionRecord) -> Option<f64>) -> HeatmapGrid {
    let mut counts = vec![vec![0usize; ORDER_BINS]; INVENTORY_BINS];
    let mut sums = vec![vec![0.0; ORDER_BINS]; INVENTORY_BINS];
    let mut seeds = vec![vec![0usize; ORDER_BINS]; INVENTORY_BINS];
    for log in logs {
        let mut s = vec![vec![(0.0, 0usize); ORDER_BINS]; INVENTORY_BINS];
        for d in log {
            let Some(v) = value(d) else { continue };
            let i = bin_index(d.inventory, INVENTORY_BIN, INVENTORY_BINS);
            let j = bin_index(d.order, ORDER_BIN, ORDER_BINS);
            s[i][j].0 += v;
            s[i][j].1 += 1;
        }
        for i in 0..INVENTORY_BINS {
            for j in 0..ORDER_BINS {
                let (sum, n) = s[i][j];
                if n > 0 {
                    counts[i][j] += n;
                    sums[i][j] += sum / n as f64;
                    seeds[i][j] += 1;
                }
            }
        }
    }
    let values = (0..INVENTORY_BINS)
        .map(|i| {
            (0..ORDER_BINS)
                .map(|j| (seeds[i][j] > 0).then(|| sums[i][j] / seeds[i][j] as f64))
                .collect()
        })
        .collect();
    HeatmapGrid {
        name: name.into(),
        counts,
        values,
    }
}

/// Bins per-seed decision logs; cell values are means within each seed,
/// averaged across the seeds that populate the cell.
pub fn extract_heatmaps(logs: &[Vec<DecisionRecord>]) -> Result<HeatmapSet> {
    if logs.iter().all(Vec::is_empty) {
        return Err(Error::Empty("decision log"));
    }
    let policy = grid("policy", logs, |d| Some(d.replenishment));
    let has_gvf = logs.iter().flatten().any(|d| d.gvf.is_some());
    let gvf = has_gvf.then(|| {
        [
            grid("gvf_wastage", logs, |d| d.gvf.map(|g| g[0])),
            grid("gvf_stockout", logs, |d| d.gvf.map(|g| g[1])),
            grid("gvf_depletion", logs, |d| d.gvf.map(|g| g[2])),
        ]
    });
    Ok(HeatmapSet { policy, gvf })
}
