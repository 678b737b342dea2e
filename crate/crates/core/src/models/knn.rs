use serde::{Deserialize, Serialize};

use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5 }
    }
}

/// Stores the z-scored training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub features: Vec<FeatureNo>,
    pub k: usize,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub points: Vec<f64>,
    pub positive: Vec<bool>,
}

pub fn fit_knn(table: &FeatureTable, config: &KnnConfig) -> Result<KnnModel> {
    table.require_both_classes("knn")?;
    table.require_finalized("knn")?;
    let n = table.n_rows();
    if config.k == 0 || config.k > n {
        return Err(Error::invalid(format!("knn: k = {} but {n} training rows", config.k)));
    }
    let d = table.n_cols();
    let mut means = vec![0.0; d];
    let mut scales = vec![1.0; d];
    for c in 0..d {
        let col = table.column(c);
        let m = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
        means[c] = m;
        if var > 0.0 {
            scales[c] = var.sqrt();
        }
    }
    let mut points = Vec::with_capacity(n * d);
    for i in 0..n {
        points.extend(table.row(i).iter().enumerate().map(|(c, v)| (v - means[c]) / scales[c]));
    }
    Ok(KnnModel {
        features: table.features().to_vec(),
        k: config.k,
        means,
        scales,
        points,
        positive: table.labels().iter().map(|&l| l == ClassLabel::NonSurvived).collect(),
    })
}

impl KnnModel {
    /// Share of non-survived rows among the k nearest neighbours; distance ties
    /// go to the lower training index.
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        let d = self.means.len();
        let z: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(c, v)| (v - self.means[c]) / self.scales[c])
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .chunks_exact(d.max(1))
            .take(self.positive.len())
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
        }
        let votes = dist[..self.k].iter().filter(|(_, i)| self.positive[*i]).count();
        votes as f64 / self.k as f64
    }
}
