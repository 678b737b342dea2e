use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, ConfusionCounts, EvalReport};
use crate::datamodel::{ClassLabel, FeatureTable};
use crate::error::{Error, Result};
use crate::models::{Classifier, ModelSpec};
use crate::resample::{smote_with_origins, SmoteConfig};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    /// Stratified k-fold, confusion counts pooled over out-of-fold predictions.
    CrossValidated { folds: usize },
    /// Fit and score on the same rows.
    TrainingSet,
    /// One stratified split.
    Holdout { test_fraction: f64 },
}

/// Everything that decides how a model is scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub evaluation: Evaluation,
    /// `None` disables SMOTE. The config's own seed is ignored: SMOTE seeds
    /// are drawn from `seed` so that every fold gets its own stream.
    pub balance: Option<SmoteConfig>,
    /// Balance the whole table before splitting instead of inside each
    /// training fold.
    pub paper_mode: bool,
    pub seed: u64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            evaluation: Evaluation::CrossValidated { folds: 5 },
            balance: Some(SmoteConfig::default()),
            paper_mode: false,
            seed: 0,
        }
    }
}

/// Row provenance of one training/scoring round, in indices of the table
/// passed to [`evaluate`]. Only populated when SMOTE runs after splitting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub test_rows: Vec<usize>,
    pub train_rows: Vec<usize>,
    /// Parents (base and neighbour) of every synthetic training row.
    pub synthetic_parents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub folds: Vec<FoldAudit>,
}

/// Fold index (0..k) for every row; each class is shuffled and dealt
/// round-robin so fold sizes differ by at most one per class.
pub fn stratified_folds(labels: &[ClassLabel], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut r = rng(seed);
    let mut fold = vec![0; labels.len()];
    for class in ClassLabel::BOTH {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < k {
            return Err(Error::invalid(format!(
                "class {} has {} rows, fewer than {k} folds",
                class.as_str(),
                rows.len()
            )));
        }
        rows.shuffle(&mut r);
        for (j, &i) in rows.iter().enumerate() {
            fold[i] = j % k;
        }
    }
    Ok(fold)
}

fn smote_seed(protocol: &Protocol, stream: &str) -> u64 {
    derive_seed(derive_seed(protocol.seed, "smote"), stream)
}

/// Fits on `train` (balancing it if the protocol asks for in-split SMOTE),
/// scores `test` and returns counts plus provenance.
fn train_and_score(
    table: &FeatureTable,
    spec: &ModelSpec,
    protocol: &Protocol,
    train: &[usize],
    test: &[usize],
    stream: &str,
) -> Result<(ConfusionCounts, FoldAudit)> {
    let train_table = table.take_rows(train);
    let mut audit = FoldAudit {
        test_rows: test.to_vec(),
        train_rows: train.to_vec(),
        synthetic_parents: Vec::new(),
    };
    let fitted_on = match (&protocol.balance, protocol.paper_mode) {
        (Some(cfg), false) => {
            let cfg = cfg.with_seed(smote_seed(protocol, stream));
            let out = smote_with_origins(&train_table, &cfg)?;
            for o in &out.origins {
                audit.synthetic_parents.push(train[o.base_row]);
                audit.synthetic_parents.push(train[o.neighbor_row]);
            }
            out.table
        }
        _ => train_table,
    };
    let model = spec.fit(&fitted_on)?;
    let test_table = table.take_rows(test);
    let pred = model.predict(&test_table)?;
    Ok((ConfusionCounts::from_predictions(test_table.labels(), &pred), audit))
}

fn stratified_holdout(labels: &[ClassLabel], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("test fraction must be in (0, 1), got {fraction}")));
    }
    let mut r = rng(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in ClassLabel::BOTH {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut r);
        let n_test = ((rows.len() as f64 * fraction).round() as usize).clamp(1, rows.len().saturating_sub(1));
        if rows.len() < 2 {
            return Err(Error::invalid(format!("class {} too small for a holdout split", class.as_str())));
        }
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn evaluate(table: &FeatureTable, spec: &ModelSpec, protocol: &Protocol) -> Result<EvalOutcome> {
    table.require_both_classes("evaluation")?;
    table.require_finalized("evaluation")?;
    let balanced;
    let data = match (&protocol.balance, protocol.paper_mode) {
        (Some(cfg), true) => {
            let cfg = cfg.with_seed(smote_seed(protocol, "full"));
            balanced = smote_with_origins(table, &cfg)?.table;
            &balanced
        }
        _ => table,
    };
    let all: Vec<usize> = (0..data.n_rows()).collect();
    let mut counts = ConfusionCounts::default();
    let mut folds = Vec::new();
    match protocol.evaluation {
        Evaluation::CrossValidated { folds: k } => {
            let assign = stratified_folds(data.labels(), k, derive_seed(protocol.seed, "folds"))?;
            for f in 0..k {
                let (test, train): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| assign[i] == f);
                let (c, audit) = train_and_score(data, spec, protocol, &train, &test, &format!("fold{f}"))?;
                counts.merge(&c);
                folds.push(audit);
            }
        }
        Evaluation::TrainingSet => {
            // in-split balancing here means: balance, fit, score the balanced rows
            let (c, audit) = if let (Some(cfg), false) = (&protocol.balance, protocol.paper_mode) {
                let cfg = cfg.with_seed(smote_seed(protocol, "train"));
                let bal = smote_with_origins(data, &cfg)?.table;
                let model = spec.fit(&bal)?;
                let pred = model.predict(&bal)?;
                (ConfusionCounts::from_predictions(bal.labels(), &pred), FoldAudit::default())
            } else {
                let model = spec.fit(data)?;
                let pred = model.predict(data)?;
                (ConfusionCounts::from_predictions(data.labels(), &pred), FoldAudit::default())
            };
            counts.merge(&c);
            folds.push(audit);
        }
        Evaluation::Holdout { test_fraction } => {
            let (train, test) = stratified_holdout(data.labels(), test_fraction, derive_seed(protocol.seed, "folds"))?;
            let (c, audit) = train_and_score(data, spec, protocol, &train, &test, "holdout")?;
            counts.merge(&c);
            folds.push(audit);
        }
    }
    let mut report = compute_metrics(&counts);
    report.protocol = Some(*protocol);
    Ok(EvalOutcome { report, folds })
}

/// Stratified k-fold shortcut with default SMOTE settings.
pub fn kfold_evaluate(
    table: &FeatureTable,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    paper_mode: bool,
) -> Result<EvalReport> {
    let protocol = Protocol {
        evaluation: Evaluation::CrossValidated { folds: k },
        balance: Some(SmoteConfig::default()),
        paper_mode,
        seed,
    };
    evaluate(table, spec, &protocol).map(|o| o.report)
}
