//! Mean imputation and percentile winsorization.

use super::table::FeatureTable;
use crate::error::{Error, Result};

/// Default winsorization bounds, in percent.
pub const DEFAULT_WINSOR: (f64, f64) = (1.0, 99.0);

/// Percentile of an ascending-sorted slice by linear interpolation between
/// closest ranks: position `(n - 1) * pct / 100`.
pub fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let h = (sorted.len() - 1) as f64 * pct / 100.0;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, pct)
}

/// Replaces every missing cell with the mean of the observed values of its
/// column, computed over both classes. The missing mask is left untouched.
pub fn impute_mean(table: &FeatureTable) -> Result<FeatureTable> {
    let mut out = table.clone();
    for col in 0..table.n_cols() {
        let column = table.column(col);
        if !column.iter().any(|v| v.is_nan()) {
            continue;
        }
        let observed: Vec<f64> = column.iter().copied().filter(|v| !v.is_nan()).collect();
        if observed.is_empty() {
            return Err(Error::AllMissing(table.features()[col]));
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        for (i, v) in column.iter().enumerate() {
            if v.is_nan() {
                out.set(i, col, mean);
            }
        }
    }
    Ok(out)
}

/// Clips each column to its `[lower_pct, upper_pct]` percentiles. Missing
/// cells are ignored when computing percentiles and left missing.
pub fn winsorize(table: &FeatureTable, lower_pct: f64, upper_pct: f64) -> Result<FeatureTable> {
    if !(0.0..100.0).contains(&lower_pct) || !(lower_pct < upper_pct && upper_pct <= 100.0) {
        return Err(Error::invalid(format!(
            "winsorize bounds must satisfy 0 <= lower < upper <= 100, got ({lower_pct}, {upper_pct})"
        )));
    }
    let mut out = table.clone();
    for col in 0..table.n_cols() {
        let column = table.column(col);
        let mut observed: Vec<f64> = column.iter().copied().filter(|v| !v.is_nan()).collect();
        if observed.is_empty() {
            continue;
        }
        observed.sort_by(f64::total_cmp);
        let lo = percentile_sorted(&observed, lower_pct);
        let hi = percentile_sorted(&observed, upper_pct);
        for (i, &v) in column.iter().enumerate() {
            if v.is_nan() {
                continue;
            }
            let clipped = v.clamp(lo, hi);
            if clipped != v {
                out.set(i, col, clipped);
            }
        }
    }
    Ok(out)
}

/// Winsorize, then impute: the order in which raw tables are finalized.
pub fn finalize(table: &FeatureTable, lower_pct: f64, upper_pct: f64) -> Result<FeatureTable> {
    impute_mean(&winsorize(table, lower_pct, upper_pct)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{ClassLabel, FeatureNo};

    fn single_column(values: &[f64]) -> FeatureTable {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let labels = (0..values.len())
            .map(|i| if i % 2 == 0 { ClassLabel::Survived } else { ClassLabel::NonSurvived })
            .collect();
        FeatureTable::from_rows(vec![FeatureNo::new(31).unwrap()], &rows, labels).unwrap()
    }

    #[test]
    fn percentile_convention() {
        let v: Vec<f64> = (1..=5).map(f64::from).collect();
        assert_eq!(percentile_sorted(&v, 50.0), 3.0);
        assert_eq!(percentile_sorted(&v, 25.0), 2.0);
        assert_eq!(percentile_sorted(&v, 75.0), 4.0);
        assert_eq!(percentile_sorted(&v, 0.0), 1.0);
        assert_eq!(percentile_sorted(&v, 100.0), 5.0);
        assert_eq!(percentile_sorted(&[1.0, 2.0], 50.0), 1.5);
    }

    #[test]
    fn imputes_column_mean() {
        let t = single_column(&[1.0, 2.0, f64::NAN, 3.0]);
        let out = impute_mean(&t).unwrap();
        assert_eq!(out.column(0), vec![1.0, 2.0, 2.0, 3.0]);
        assert!(out.is_missing(2, 0));

        let t = single_column(&[10.0, f64::NAN, f64::NAN, 20.0]);
        assert_eq!(impute_mean(&t).unwrap().column(0), vec![10.0, 15.0, 15.0, 20.0]);
    }

    #[test]
    fn impute_without_missing_is_identity() {
        let t = single_column(&[1.0, 5.0, 2.0]);
        assert_eq!(impute_mean(&t).unwrap(), t);
    }

    #[test]
    fn impute_rejects_all_missing() {
        let t = single_column(&[f64::NAN, f64::NAN]);
        assert!(matches!(impute_mean(&t), Err(Error::AllMissing(_))));
    }

    #[test]
    fn winsorize_hundred_points() {
        // Hand computation: h = 99 * 0.01 = 0.99 -> 1 + 0.99 * (2 - 1) = 1.99;
        // h = 99 * 0.99 = 98.01 -> 99 + 0.01 * (100 - 99) = 99.01.
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let out = winsorize(&single_column(&v), 1.0, 99.0).unwrap();
        let col = out.column(0);
        assert!((col[0] - 1.99).abs() < 1e-12);
        assert!((col[99] - 99.01).abs() < 1e-12);
        assert_eq!(col[50], 51.0);
    }

    #[test]
    fn winsorize_identity_cases() {
        let v: Vec<f64> = (1..=20).map(|i| (i * i) as f64).collect();
        let t = single_column(&v);
        assert_eq!(winsorize(&t, 0.0, 100.0).unwrap(), t);
        let c = single_column(&[4.0; 10]);
        assert_eq!(winsorize(&c, 1.0, 99.0).unwrap(), c);
    }

    #[test]
    fn winsorize_skips_missing() {
        let t = single_column(&[1.0, f64::NAN, 3.0, 100.0]);
        let out = winsorize(&t, 10.0, 90.0).unwrap();
        assert!(out.get(1, 0).is_nan());
        assert!(out.get(3, 0) < 100.0);
    }

    #[test]
    fn winsorize_rejects_bad_bounds() {
        let t = single_column(&[1.0, 2.0]);
        assert!(winsorize(&t, 50.0, 50.0).is_err());
        assert!(winsorize(&t, -1.0, 50.0).is_err());
        assert!(winsorize(&t, 1.0, 101.0).is_err());
    }
}
