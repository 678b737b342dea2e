//! SMOTE oversampling of the minority class.
//!
//! Neighbours are found by exact pairwise scan in z-scored space (minority
//! mean/std per column); interpolation happens in the original units. Output
//! keeps the input rows first, in order, followed by the synthetic rows.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{ClassLabel, FeatureTable};
use crate::error::{Error, Result};
use crate::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Minority/majority ratio to reach; 1.0 balances exactly.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        SmoteConfig { seed, ..self }
    }
}

/// Where a synthetic row came from: `base + delta * (neighbor - base)`, with
/// both indices into the input table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub base_row: usize,
    pub neighbor_row: usize,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    pub table: FeatureTable,
    /// One entry per appended row, in order.
    pub origins: Vec<SyntheticOrigin>,
}

/// Minority count required after balancing, rounded to nearest with ties up.
pub fn target_minority_count(majority: usize, ratio: f64) -> usize {
    (ratio * majority as f64 + 0.5).floor() as usize
}

pub fn smote_balance(table: &FeatureTable, config: &SmoteConfig) -> Result<FeatureTable> {
    smote_with_origins(table, config).map(|out| out.table)
}

pub fn smote_with_origins(table: &FeatureTable, config: &SmoteConfig) -> Result<SmoteOutput> {
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) {
        return Err(Error::invalid(format!(
            "SMOTE target ratio must be in (0, 1], got {}",
            config.target_ratio
        )));
    }
    if config.k_neighbors == 0 {
        return Err(Error::invalid("SMOTE needs k_neighbors >= 1"));
    }
    table.require_both_classes("SMOTE")?;
    table.require_finalized("SMOTE")?;

    let [n_surv, n_non] = table.class_counts();
    let (minority, majority_count) = if n_non <= n_surv {
        (ClassLabel::NonSurvived, n_surv)
    } else {
        (ClassLabel::Survived, n_non)
    };
    let minority_rows = table.class_rows(minority);
    let target = target_minority_count(majority_count, config.target_ratio);
    let needed = target.saturating_sub(minority_rows.len());
    if needed == 0 {
        return Ok(SmoteOutput {
            table: table.clone(),
            origins: Vec::new(),
        });
    }
    let m = minority_rows.len();
    if config.k_neighbors >= m {
        return Err(Error::invalid(format!(
            "SMOTE: minority class has {m} rows, needs more than k = {}",
            config.k_neighbors
        )));
    }

    let neighbors = minority_neighbors(table, &minority_rows, config.k_neighbors);
    let mut r = rng(config.seed);
    let mut out = table.clone();
    let mut origins = Vec::with_capacity(needed);
    let n_cols = table.n_cols();
    let mut synthetic = vec![0.0; n_cols];
    for _ in 0..needed {
        let a = r.random_range(0..m);
        let b = neighbors[a][r.random_range(0..config.k_neighbors)];
        let delta: f64 = r.random();
        let base = table.row(minority_rows[a]);
        let other = table.row(minority_rows[b]);
        for ((s, &x), &y) in synthetic.iter_mut().zip(base).zip(other) {
            *s = (x + delta * (y - x)).clamp(x.min(y), x.max(y));
        }
        out.push_row(&synthetic, minority);
        origins.push(SyntheticOrigin {
            base_row: minority_rows[a],
            neighbor_row: minority_rows[b],
            delta,
        });
    }
    Ok(SmoteOutput {
        table: out,
        origins,
    })
}

/// k nearest minority neighbours of each minority row (positions into
/// `minority_rows`), ties broken by row index.
pub fn minority_neighbors(table: &FeatureTable, minority_rows: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n_cols = table.n_cols();
    let m = minority_rows.len();
    let mut scaled = vec![0.0; m * n_cols];
    for col in 0..n_cols {
        let vals: Vec<f64> = minority_rows.iter().map(|&i| table.get(i, col)).collect();
        let mean = vals.iter().sum::<f64>() / m as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for (p, v) in vals.iter().enumerate() {
            scaled[p * n_cols + col] = (v - mean) / sd;
        }
    }
    let point = |p: usize| &scaled[p * n_cols..(p + 1) * n_cols];
    (0..m)
        .map(|a| {
            let pa = point(a);
            let mut dist: Vec<(f64, usize)> = (0..m)
                .filter(|&b| b != a)
                .map(|b| {
                    let d = pa.iter().zip(point(b)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
                    (d, b)
                })
                .collect();
            dist.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            dist.truncate(k);
            dist.into_iter().map(|(_, b)| b).collect()
        })
        .collect()
}
