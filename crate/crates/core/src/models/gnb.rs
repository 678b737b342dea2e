use serde::{Deserialize, Serialize};

use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnbConfig {
    /// Variance floor as a fraction of the largest column variance.
    pub var_smoothing: f64,
}

impl Default for GnbConfig {
    fn default() -> Self {
        GnbConfig { var_smoothing: 1e-9 }
    }
}

/// Index 0 holds the survived class, index 1 the non-survived class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub features: Vec<FeatureNo>,
    pub log_prior: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub vars: [Vec<f64>; 2],
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (m, values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n)
}

pub fn fit_gnb(table: &FeatureTable, config: &GnbConfig) -> Result<GaussianNb> {
    table.require_both_classes("gaussian naive bayes")?;
    table.require_finalized("gaussian naive bayes")?;
    let d = table.n_cols();
    let max_var = (0..d)
        .map(|c| mean_var(&table.column(c)).1)
        .fold(0.0, f64::max);
    let floor = if max_var > 0.0 {
        config.var_smoothing * max_var
    } else {
        config.var_smoothing
    };
    let counts = table.class_counts();
    let n = table.n_rows() as f64;
    let mut means = [vec![0.0; d], vec![0.0; d]];
    let mut vars = [vec![0.0; d], vec![0.0; d]];
    for class in ClassLabel::BOTH {
        let k = class.index();
        for c in 0..d {
            let (m, v) = mean_var(&table.class_column(c, class));
            means[k][c] = m;
            vars[k][c] = v + floor;
        }
    }
    Ok(GaussianNb {
        features: table.features().to_vec(),
        log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
        means,
        vars,
    })
}

impl GaussianNb {
    fn log_joint(&self, k: usize, row: &[f64]) -> f64 {
        self.log_prior[k]
            + row
                .iter()
                .enumerate()
                .map(|(c, x)| {
                    let v = self.vars[k][c];
                    -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - self.means[k][c]).powi(2) / v)
                })
                .sum::<f64>()
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        super::hgb::sigmoid(self.log_joint(1, row) - self.log_joint(0, row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn sample(seed: u64, n: usize) -> FeatureTable {
        let mut r = rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let pos = i % 2 == 1;
            let centre = if pos { 6.0 } else { 0.0 };
            rows.push((0..3).map(|_| { let z: f64 = StandardNormal.sample(&mut r); centre + z }).collect());
            labels.push(if pos { ClassLabel::NonSurvived } else { ClassLabel::Survived });
        }
        let f = (1..=3).map(|n| FeatureNo::new(n).unwrap()).collect();
        FeatureTable::from_rows(f, &rows, labels).unwrap()
    }

    #[test]
    fn separated_gaussians() {
        let train = sample(1, 400);
        let test = sample(2, 2000);
        let m = fit_gnb(&train, &GnbConfig::default()).unwrap();
        let hits = (0..test.n_rows())
            .filter(|&i| (m.predict_proba_row(test.row(i)) > 0.5) == (test.labels()[i] == ClassLabel::NonSurvived))
            .count();
        assert!(hits as f64 / 2000.0 > 0.99);
    }

    #[test]
    fn constant_column_is_floored() {
        let rows = vec![vec![1.0], vec![1.0], vec![1.0]];
        let labels = vec![ClassLabel::Survived, ClassLabel::NonSurvived, ClassLabel::Survived];
        let t = FeatureTable::from_rows(vec![FeatureNo::new(1).unwrap()], &rows, labels).unwrap();
        let m = fit_gnb(&t, &GnbConfig::default()).unwrap();
        let p = m.predict_proba_row(&[1.0]);
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
    }
}
