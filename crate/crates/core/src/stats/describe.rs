use serde::{Deserialize, Serialize};

use super::tests::{mann_whitney, TestResult};
use crate::datamodel::{percentile, ClassLabel, FeatureNo, FeatureTable, Quartiles};
use crate::error::{Error, Result};

pub fn quartiles(values: &[f64]) -> Quartiles {
    Quartiles::new(percentile(values, 50.0), percentile(values, 25.0), percentile(values, 75.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub feature: FeatureNo,
    pub survived: Quartiles,
    pub non_survived: Quartiles,
    pub mann_whitney: TestResult,
}

/// Per-class median and quartiles of one feature (linear-interpolation percentiles).
pub fn describe(table: &FeatureTable, feature: FeatureNo) -> Result<(Quartiles, Quartiles)> {
    table.require_finalized("describe")?;
    let col = table.col_index(feature).ok_or(Error::MissingFeature(feature))?;
    let s = table.class_column(col, ClassLabel::Survived);
    let n = table.class_column(col, ClassLabel::NonSurvived);
    if s.is_empty() || n.is_empty() {
        return Err(Error::SingleClass(format!("describe {feature}: a class is empty")));
    }
    Ok((quartiles(&s), quartiles(&n)))
}

/// Quartiles and the survived-vs-non-survived Mann–Whitney test for every column.
pub fn describe_all(table: &FeatureTable) -> Result<Vec<FeatureSummary>> {
    table.require_both_classes("describe")?;
    table
        .features()
        .iter()
        .enumerate()
        .map(|(c, &feature)| {
            let (survived, non_survived) = describe(table, feature)?;
            let mw = mann_whitney(
                &table.class_column(c, ClassLabel::Survived),
                &table.class_column(c, ClassLabel::NonSurvived),
            )?;
            Ok(FeatureSummary {
                feature,
                survived,
                non_survived,
                mann_whitney: mw,
            })
        })
        .collect()
}

/// Features whose two-sided Mann–Whitney p is below `alpha`, catalog order.
pub fn select_features(table: &FeatureTable, alpha: f64) -> Result<Vec<FeatureNo>> {
    table.require_finalized("select_features")?;
    Ok(describe_all(table)?
        .into_iter()
        .filter(|s| s.mann_whitney.p_value < alpha)
        .map(|s| s.feature)
        .collect())
}
