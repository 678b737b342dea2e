use serde::{Deserialize, Serialize};

use crate::datamodel::{percentile_sorted, FeatureTable};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_BINS: usize = 255;

/// Per-feature bin edges. A value `x` falls in bin `#{edges < x}`, so a split
/// "bin <= t" is the same as "x <= edges[t]".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub max_bins: usize,
    pub edges: Vec<Vec<f64>>,
}

/// Column-major bin indices.
#[derive(Debug, Clone)]
pub struct BinnedData {
    pub columns: Vec<Vec<u8>>,
    pub n_bins: Vec<usize>,
}

pub fn fit_bins(table: &FeatureTable, max_bins: usize) -> Result<BinMapper> {
    if !(2..=256).contains(&max_bins) {
        return Err(Error::invalid(format!("max_bins must be in [2, 256], got {max_bins}")));
    }
    if table.n_rows() == 0 {
        return Err(Error::invalid("cannot fit bins on an empty table"));
    }
    table.require_finalized("fit_bins")?;
    let edges = (0..table.n_cols())
        .map(|col| column_edges(table.column(col), max_bins))
        .collect();
    Ok(BinMapper { max_bins, edges })
}

fn column_edges(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    // equal-frequency edges
    let mut edges: Vec<f64> = (1..max_bins)
        .map(|b| percentile_sorted(&values, 100.0 * b as f64 / max_bins as f64))
        .collect();
    edges.dedup();
    // an edge at the maximum would leave the last bin empty
    let max = values[values.len() - 1];
    edges.retain(|&e| e < max);
    edges
}

impl BinMapper {
    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    pub fn bin(&self, col: usize, x: f64) -> u8 {
        self.edges[col].partition_point(|&e| e < x) as u8
    }

    pub fn n_bins(&self, col: usize) -> usize {
        self.edges[col].len() + 1
    }

    /// Upper edge of bin `t` for column `col`.
    pub fn threshold(&self, col: usize, t: u8) -> f64 {
        self.edges[col][t as usize]
    }

    pub fn transform(&self, table: &FeatureTable) -> BinnedData {
        let columns = (0..self.n_features())
            .map(|col| {
                table
                    .values()
                    .iter()
                    .skip(col)
                    .step_by(table.n_cols())
                    .map(|&x| self.bin(col, x))
                    .collect()
            })
            .collect();
        BinnedData {
            columns,
            n_bins: (0..self.n_features()).map(|c| self.n_bins(c)).collect(),
        }
    }
}
