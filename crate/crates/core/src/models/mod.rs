//! Histogram gradient boosting and three baseline classifiers.

mod bins;
mod gnb;
mod hgb;
mod knn;
mod tree;

pub use bins::{fit_bins, BinMapper, BinnedData, DEFAULT_MAX_BINS};
pub use gnb::{fit_gnb, GaussianNb, GnbConfig};
pub use hgb::{fit_hgb, sigmoid, BoostedEnsemble, HgbConfig, Tree, TreeNode};
pub use knn::{fit_knn, KnnConfig, KnnModel};
pub use tree::{fit_decision_tree, DecisionTree, DtConfig, DtNode};

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::{Error, Result};

/// Shared prediction contract. Scores are the probability of `NonSurvived`.
pub trait Classifier {
    fn features(&self) -> &[FeatureNo];

    /// Row values in the order of [`Classifier::features`].
    fn proba_row(&self, row: &[f64]) -> f64;

    /// Default decision: class 1 only when its score strictly wins.
    fn decide(&self, p: f64) -> ClassLabel {
        if p > 0.5 {
            ClassLabel::NonSurvived
        } else {
            ClassLabel::Survived
        }
    }

    fn predict_proba(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let aligned = align(table, self.features())?;
        Ok((0..aligned.n_rows()).map(|i| self.proba_row(aligned.row(i))).collect())
    }

    fn predict(&self, table: &FeatureTable) -> Result<Vec<ClassLabel>> {
        Ok(self.predict_proba(table)?.into_iter().map(|p| self.decide(p)).collect())
    }

    fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<ClassLabel>> {
        let d = self.features().len();
        rows.iter()
            .map(|r| {
                if r.len() != d {
                    return Err(Error::FeatureMismatch(format!("row has {} values, model expects {d}", r.len())));
                }
                Ok(self.decide(self.proba_row(r)))
            })
            .collect()
    }
}

fn align<'a>(table: &'a FeatureTable, features: &[FeatureNo]) -> Result<Cow<'a, FeatureTable>> {
    if table.features() == features {
        return Ok(Cow::Borrowed(table));
    }
    if let Some(f) = features.iter().find(|&&f| table.col_index(f).is_none()) {
        return Err(Error::FeatureMismatch(format!("model feature {f} is absent from the input")));
    }
    Ok(Cow::Owned(table.select(features)?))
}

impl Classifier for BoostedEnsemble {
    fn features(&self) -> &[FeatureNo] {
        &self.features
    }
    fn proba_row(&self, row: &[f64]) -> f64 {
        self.predict_proba_row(row)
    }
    fn decide(&self, p: f64) -> ClassLabel {
        if p >= 0.5 {
            ClassLabel::NonSurvived
        } else {
            ClassLabel::Survived
        }
    }
}

impl Classifier for DecisionTree {
    fn features(&self) -> &[FeatureNo] {
        &self.features
    }
    fn proba_row(&self, row: &[f64]) -> f64 {
        self.predict_proba_row(row)
    }
}

impl Classifier for KnnModel {
    fn features(&self) -> &[FeatureNo] {
        &self.features
    }
    fn proba_row(&self, row: &[f64]) -> f64 {
        self.predict_proba_row(row)
    }
}

impl Classifier for GaussianNb {
    fn features(&self) -> &[FeatureNo] {
        &self.features
    }
    fn proba_row(&self, row: &[f64]) -> f64 {
        self.predict_proba_row(row)
    }
}

/// Model family plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Hgb(HgbConfig),
    Dt(DtConfig),
    Knn(KnnConfig),
    Gnb(GnbConfig),
}

impl ModelSpec {
    pub fn parse_kind(kind: &str) -> Result<ModelSpec> {
        match kind.to_ascii_lowercase().as_str() {
            "hgb" => Ok(ModelSpec::Hgb(HgbConfig::default())),
            "dt" => Ok(ModelSpec::Dt(DtConfig::default())),
            "knn" => Ok(ModelSpec::Knn(KnnConfig::default())),
            "gnb" => Ok(ModelSpec::Gnb(GnbConfig::default())),
            other => Err(Error::invalid(format!("unknown model `{other}` (hgb, dt, knn, gnb)"))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Hgb(_) => "hgb",
            ModelSpec::Dt(_) => "dt",
            ModelSpec::Knn(_) => "knn",
            ModelSpec::Gnb(_) => "gnb",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            ModelSpec::Hgb(_) => "Histogram-based Gradient Boosting (HGB)",
            ModelSpec::Dt(_) => "Decision Tree (DT)",
            ModelSpec::Knn(_) => "K-nearest neighbors (KNN)",
            ModelSpec::Gnb(_) => "Gaussian Naive Bayes (GNB)",
        }
    }

    pub fn fit(&self, table: &FeatureTable) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Hgb(c) => TrainedModel::Hgb(fit_hgb(table, c)?),
            ModelSpec::Dt(c) => TrainedModel::Dt(fit_decision_tree(table, c)?),
            ModelSpec::Knn(c) => TrainedModel::Knn(fit_knn(table, c)?),
            ModelSpec::Gnb(c) => TrainedModel::Gnb(fit_gnb(table, c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Hgb(BoostedEnsemble),
    Dt(DecisionTree),
    Knn(KnnModel),
    Gnb(GaussianNb),
}

impl TrainedModel {
    fn inner(&self) -> &dyn Classifier {
        match self {
            TrainedModel::Hgb(m) => m,
            TrainedModel::Dt(m) => m,
            TrainedModel::Knn(m) => m,
            TrainedModel::Gnb(m) => m,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

impl Classifier for TrainedModel {
    fn features(&self) -> &[FeatureNo] {
        self.inner().features()
    }
    fn proba_row(&self, row: &[f64]) -> f64 {
        self.inner().proba_row(row)
    }
    fn decide(&self, p: f64) -> ClassLabel {
        self.inner().decide(p)
    }
}
