use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::FeatureNo;
use crate::error::{Error, Result};

/// Outcome class. `Survived` is coded 0, `NonSurvived` (the positive class) 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ClassLabel {
    Survived,
    NonSurvived,
}

impl ClassLabel {
    pub const BOTH: [ClassLabel; 2] = [ClassLabel::Survived, ClassLabel::NonSurvived];

    pub fn code(self) -> u8 {
        match self {
            ClassLabel::Survived => 0,
            ClassLabel::NonSurvived => 1,
        }
    }

    pub fn index(self) -> usize {
        self.code() as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ClassLabel::Survived),
            1 => Some(ClassLabel::NonSurvived),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            ClassLabel::Survived => ClassLabel::NonSurvived,
            ClassLabel::NonSurvived => ClassLabel::Survived,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Survived => "survived",
            ClassLabel::NonSurvived => "non-survived",
        }
    }

    /// Parses `0`/`1` or the `survived`/`non-survived` literals.
    pub fn parse(raw: &str) -> Option<Self> {
        let s = raw.trim();
        if s.eq_ignore_ascii_case("survived") {
            return Some(ClassLabel::Survived);
        }
        if s.eq_ignore_ascii_case("non-survived") || s.eq_ignore_ascii_case("non_survived") {
            return Some(ClassLabel::NonSurvived);
        }
        match s.parse::<f64>() {
            Ok(v) if v == 0.0 => Some(ClassLabel::Survived),
            Ok(v) if v == 1.0 => Some(ClassLabel::NonSurvived),
            _ => None,
        }
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        ClassLabel::from_code(value).ok_or_else(|| Error::invalid(format!("class label {value}")))
    }
}

impl From<ClassLabel> for u8 {
    fn from(value: ClassLabel) -> u8 {
        value.code()
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Row-major patients × features matrix with outcome labels.
///
/// Missing cells hold `NaN` in `values` and `true` in the missing mask until
/// imputation replaces them; the mask is kept afterwards for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    features: Vec<FeatureNo>,
    values: Vec<f64>,
    labels: Vec<ClassLabel>,
    missing: Vec<bool>,
}

impl FeatureTable {
    pub fn new(
        features: Vec<FeatureNo>,
        values: Vec<f64>,
        labels: Vec<ClassLabel>,
        missing: Vec<bool>,
    ) -> Result<Self> {
        if features.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("feature columns must be strictly increasing"));
        }
        let n_cols = features.len();
        if values.len() != labels.len() * n_cols || missing.len() != values.len() {
            return Err(Error::invalid(format!(
                "shape mismatch: {} values, {} mask cells, {} labels x {} columns",
                values.len(),
                missing.len(),
                labels.len(),
                n_cols
            )));
        }
        Ok(FeatureTable {
            features,
            values,
            labels,
            missing,
        })
    }

    /// Builds a table from rows; non-finite cells are flagged missing.
    pub fn from_rows(
        features: Vec<FeatureNo>,
        rows: &[Vec<f64>],
        labels: Vec<ClassLabel>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid("row count differs from label count"));
        }
        let mut values = Vec::with_capacity(rows.len() * features.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != features.len() {
                return Err(Error::invalid(format!("row {i} has {} cells", row.len())));
            }
            values.extend(row.iter().map(|&v| if v.is_finite() { v } else { f64::NAN }));
        }
        let missing = values.iter().map(|v| v.is_nan()).collect();
        FeatureTable::new(features, values, labels, missing)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureNo] {
        &self.features
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[row * self.n_cols() + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_cols();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        let n = self.n_cols();
        self.values[row * n + col] = value;
    }

    pub fn col_index(&self, feature: FeatureNo) -> Option<usize> {
        self.features.binary_search(&feature).ok()
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values.iter().skip(col).step_by(self.n_cols()).copied().collect()
    }

    pub fn feature_column(&self, feature: FeatureNo) -> Result<Vec<f64>> {
        let col = self.col_index(feature).ok_or(Error::MissingFeature(feature))?;
        Ok(self.column(col))
    }

    /// Values of one column restricted to one class.
    pub fn class_column(&self, col: usize, class: ClassLabel) -> Vec<f64> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| self.get(i, col))
            .collect()
    }

    pub fn class_rows(&self, class: ClassLabel) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labels[i] == class).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == ClassLabel::NonSurvived).count();
        [self.n_rows() - pos, pos]
    }

    pub fn require_both_classes(&self, context: &str) -> Result<()> {
        let [a, b] = self.class_counts();
        if a == 0 || b == 0 {
            return Err(Error::SingleClass(format!(
                "{context}: {a} survived, {b} non-survived rows"
            )));
        }
        Ok(())
    }

    /// True when no cell is missing or non-finite.
    pub fn is_finalized(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn require_finalized(&self, context: &str) -> Result<()> {
        if self.is_finalized() {
            Ok(())
        } else {
            Err(Error::invalid(format!("{context}: table has missing or non-finite cells")))
        }
    }

    /// Column subset in catalog order.
    pub fn select(&self, features: &[FeatureNo]) -> Result<FeatureTable> {
        let mut wanted = features.to_vec();
        wanted.sort();
        wanted.dedup();
        let cols = wanted
            .iter()
            .map(|&f| self.col_index(f).ok_or(Error::MissingFeature(f)))
            .collect::<Result<Vec<_>>>()?;
        let n = self.n_cols();
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        let mut missing = Vec::with_capacity(values.capacity());
        for i in 0..self.n_rows() {
            for &c in &cols {
                values.push(self.values[i * n + c]);
                missing.push(self.missing[i * n + c]);
            }
        }
        Ok(FeatureTable {
            features: wanted,
            values,
            labels: self.labels.clone(),
            missing,
        })
    }

    /// Row subset, in the order given.
    pub fn take_rows(&self, rows: &[usize]) -> FeatureTable {
        let n = self.n_cols();
        let mut values = Vec::with_capacity(rows.len() * n);
        let mut missing = Vec::with_capacity(rows.len() * n);
        let mut labels = Vec::with_capacity(rows.len());
        for &i in rows {
            values.extend_from_slice(self.row(i));
            missing.extend_from_slice(&self.missing[i * n..(i + 1) * n]);
            labels.push(self.labels[i]);
        }
        FeatureTable {
            features: self.features.clone(),
            values,
            labels,
            missing,
        }
    }

    pub(crate) fn push_row(&mut self, row: &[f64], label: ClassLabel) {
        debug_assert_eq!(row.len(), self.n_cols());
        self.values.extend_from_slice(row);
        self.missing.extend(std::iter::repeat_n(false, row.len()));
        self.labels.push(label);
    }

    /// Returns a copy carrying `labels` instead of the current ones.
    pub fn with_labels(&self, labels: Vec<ClassLabel>) -> Result<FeatureTable> {
        if labels.len() != self.n_rows() {
            return Err(Error::invalid("label count differs from row count"));
        }
        Ok(FeatureTable {
            labels,
            ..self.clone()
        })
    }
}
