//! Exhaustive one- and two-threshold rule search on a single feature.
//!
//! Candidates are the midpoints between consecutive distinct sorted values,
//! plus one point below the minimum and one above the maximum. Every rule is
//! scored in O(1) from prefix class counts; the score `tn*N1 + tp*N0` is an
//! integer multiple of balanced accuracy, so ties are exact.

use serde::{Deserialize, Serialize};

use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, balanced_accuracy, ConfusionCounts, EvalReport};
use crate::resample::{smote_balance, SmoteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    One,
    Two,
}

impl RuleKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(RuleKind::One),
            "two" | "2" => Ok(RuleKind::Two),
            other => Err(Error::invalid(format!("rule kind must be one or two, got `{other}`"))),
        }
    }
}

/// Type 1 maps high values (one threshold) or the band (two thresholds) to
/// survived; Type 2 swaps the classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum RuleType {
    Type1,
    Type2,
}

impl From<RuleType> for u8 {
    fn from(t: RuleType) -> u8 {
        match t {
            RuleType::Type1 => 1,
            RuleType::Type2 => 2,
        }
    }
}

impl TryFrom<u8> for RuleType {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(RuleType::Type1),
            2 => Ok(RuleType::Type2),
            _ => Err(format!("rule type must be 1 or 2, got {v}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bounds {
    One { v_th: f64 },
    Two { v_th1: f64, v_th2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<FeatureNo>,
    pub rule_type: RuleType,
    pub bounds: Bounds,
}

impl ThresholdRule {
    pub fn one(rule_type: RuleType, v_th: f64) -> Self {
        ThresholdRule {
            feature: None,
            rule_type,
            bounds: Bounds::One { v_th },
        }
    }

    pub fn two(rule_type: RuleType, v_th1: f64, v_th2: f64) -> Self {
        ThresholdRule {
            feature: None,
            rule_type,
            bounds: Bounds::Two { v_th1, v_th2 },
        }
    }

    pub fn kind(&self) -> RuleKind {
        match self.bounds {
            Bounds::One { .. } => RuleKind::One,
            Bounds::Two { .. } => RuleKind::Two,
        }
    }

    /// `(v_th1, v_th2)`; a one-threshold rule repeats its single value.
    pub fn thresholds(&self) -> (f64, f64) {
        match self.bounds {
            Bounds::One { v_th } => (v_th, v_th),
            Bounds::Two { v_th1, v_th2 } => (v_th1, v_th2),
        }
    }
}

/// Boundaries are inclusive: `x >= v_th`, `v_th1 <= x <= v_th2`.
pub fn classify(rule: &ThresholdRule, x: f64) -> ClassLabel {
    let survived_side = match rule.bounds {
        Bounds::One { v_th } => x >= v_th,
        Bounds::Two { v_th1, v_th2 } => v_th1 <= x && x <= v_th2,
    };
    let label = if survived_side {
        ClassLabel::Survived
    } else {
        ClassLabel::NonSurvived
    };
    match rule.rule_type {
        RuleType::Type1 => label,
        RuleType::Type2 => label.flip(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearchResult {
    pub rule: ThresholdRule,
    pub a_th: f64,
    pub report: EvalReport,
}

/// Sorted distinct values with prefix class counts (`p0[k]`, `p1[k]` count
/// rows whose value is below `distinct[k]`).
struct Prefix {
    distinct: Vec<f64>,
    p0: Vec<u64>,
    p1: Vec<u64>,
    n0: u64,
    n1: u64,
}

impl Prefix {
    fn build(values: &[f64], labels: &[ClassLabel]) -> Result<Prefix> {
        if values.len() != labels.len() {
            return Err(Error::invalid("values and labels differ in length"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("threshold search needs finite values, got {v}")));
        }
        let mut pairs: Vec<(f64, ClassLabel)> = values.iter().copied().zip(labels.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut distinct = Vec::new();
        let (mut p0, mut p1) = (vec![0u64], vec![0u64]);
        for (v, l) in pairs {
            if distinct.last() != Some(&v) {
                distinct.push(v);
                p0.push(*p0.last().unwrap());
                p1.push(*p1.last().unwrap());
            }
            match l {
                ClassLabel::Survived => *p0.last_mut().unwrap() += 1,
                ClassLabel::NonSurvived => *p1.last_mut().unwrap() += 1,
            }
        }
        let (n0, n1) = (*p0.last().unwrap(), *p1.last().unwrap());
        if n0 == 0 || n1 == 0 {
            return Err(Error::SingleClass(format!("threshold search: {n0} survived, {n1} non-survived")));
        }
        Ok(Prefix { distinct, p0, p1, n0, n1 })
    }

    fn m(&self) -> usize {
        self.distinct.len()
    }

    fn padding(&self) -> f64 {
        let (lo, hi) = (self.distinct[0], self.distinct[self.m() - 1]);
        if hi > lo {
            0.01 * (hi - lo)
        } else {
            (lo.abs() * 0.01).max(1.0)
        }
    }

    /// Candidate `k` in `0..=m`: below the minimum, between `distinct[k-1]`
    /// and `distinct[k]`, or above the maximum.
    fn candidate(&self, k: usize) -> f64 {
        let m = self.m();
        if k == 0 {
            self.distinct[0] - self.padding()
        } else if k == m {
            self.distinct[m - 1] + self.padding()
        } else {
            0.5 * (self.distinct[k - 1] + self.distinct[k])
        }
    }

    fn d(&self, k: usize) -> i128 {
        self.p0[k] as i128 * self.n1 as i128 - self.p1[k] as i128 * self.n0 as i128
    }

    fn one_counts(&self, k: usize, t: RuleType) -> ConfusionCounts {
        // rows below candidate k are predicted non-survived under Type 1
        let (below0, below1) = (self.p0[k], self.p1[k]);
        match t {
            RuleType::Type1 => ConfusionCounts {
                tp: below1,
                fn_: self.n1 - below1,
                tn: self.n0 - below0,
                fp: below0,
            },
            RuleType::Type2 => ConfusionCounts {
                tp: self.n1 - below1,
                fn_: below1,
                tn: below0,
                fp: self.n0 - below0,
            },
        }
    }

    fn two_counts(&self, i: usize, j: usize, t: RuleType) -> ConfusionCounts {
        let (in0, in1) = (self.p0[j] - self.p0[i], self.p1[j] - self.p1[i]);
        match t {
            RuleType::Type1 => ConfusionCounts {
                tn: in0,
                fp: self.n0 - in0,
                tp: self.n1 - in1,
                fn_: in1,
            },
            RuleType::Type2 => ConfusionCounts {
                tp: in1,
                fn_: self.n1 - in1,
                tn: self.n0 - in0,
                fp: in0,
            },
        }
    }
}

fn score(c: &ConfusionCounts, n0: u64, n1: u64) -> u128 {
    c.tn as u128 * n1 as u128 + c.tp as u128 * n0 as u128
}

fn result(rule: ThresholdRule, counts: ConfusionCounts) -> ThresholdSearchResult {
    let report = compute_metrics(&counts);
    ThresholdSearchResult {
        rule,
        a_th: balanced_accuracy(&counts),
        report,
    }
}

/// Best one-threshold rule; ties go to the smaller threshold, then Type 1.
pub fn search_one(values: &[f64], labels: &[ClassLabel]) -> Result<ThresholdSearchResult> {
    search_one_impl(values, labels, false)
}

fn search_one_impl(values: &[f64], labels: &[ClassLabel], snap: bool) -> Result<ThresholdSearchResult> {
    let p = Prefix::build(values, labels)?;
    let mut best: Option<(u128, usize, RuleType)> = None;
    for k in 0..=p.m() {
        for t in [RuleType::Type1, RuleType::Type2] {
            let s = score(&p.one_counts(k, t), p.n0, p.n1);
            if best.is_none_or(|b| s > b.0) {
                best = Some((s, k, t));
            }
        }
    }
    let (_, k, t) = best.unwrap();
    let v = if snap && k < p.m() { p.distinct[k] } else { p.candidate(k) };
    Ok(result(ThresholdRule::one(t, v), p.one_counts(k, t)))
}

/// Best band rule; ties go to the smaller lower bound, then the smaller upper
/// bound, then Type 1.
///
/// For a fixed lower candidate `i` the band score is `D[j] - D[i]` (Type 1)
/// or `D[i] - D[j]` (Type 2) up to a constant, so the best `j >= i` is a
/// suffix arg-max/arg-min of `D` and the search runs in O(m).
pub fn search_two(values: &[f64], labels: &[ClassLabel]) -> Result<ThresholdSearchResult> {
    search_two_impl(values, labels, false)
}

fn search_two_impl(values: &[f64], labels: &[ClassLabel], snap: bool) -> Result<ThresholdSearchResult> {
    let p = Prefix::build(values, labels)?;
    let m = p.m();
    let d: Vec<i128> = (0..=m).map(|k| p.d(k)).collect();
    // smallest index attaining the suffix max / min of d
    let mut arg_max = vec![m; m + 1];
    let mut arg_min = vec![m; m + 1];
    for k in (0..m).rev() {
        arg_max[k] = if d[k] >= d[arg_max[k + 1]] { k } else { arg_max[k + 1] };
        arg_min[k] = if d[k] <= d[arg_min[k + 1]] { k } else { arg_min[k + 1] };
    }
    let mut best: Option<(i128, usize, usize, RuleType)> = None;
    for i in 0..=m {
        let cands = [
            (d[arg_max[i]] - d[i], arg_max[i], RuleType::Type1),
            (d[i] - d[arg_min[i]], arg_min[i], RuleType::Type2),
        ];
        for (s, j, t) in cands {
            let better = match best {
                None => true,
                Some((bs, bi, bj, bt)) => s > bs || (s == bs && (i, j, t) < (bi, bj, bt)),
            };
            if better {
                best = Some((s, i, j, t));
            }
        }
    }
    let (_, i, j, t) = best.unwrap();
    let (lo, hi) = if snap && i < j {
        (p.distinct[i], p.distinct[j - 1])
    } else {
        (p.candidate(i), p.candidate(j))
    };
    Ok(result(ThresholdRule::two(t, lo, hi), p.two_counts(i, j, t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// SMOTE before searching; `None` scores the raw column.
    pub balance: Option<SmoteConfig>,
    /// Report the nearest observed value instead of the midpoint. The rule
    /// classifies every observed value the same way either way.
    pub snap_to_data: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            balance: Some(SmoteConfig::default()),
            snap_to_data: false,
        }
    }
}

pub fn search_column(
    values: &[f64],
    labels: &[ClassLabel],
    kind: RuleKind,
    snap: bool,
) -> Result<ThresholdSearchResult> {
    match kind {
        RuleKind::One => search_one_impl(values, labels, snap),
        RuleKind::Two => search_two_impl(values, labels, snap),
    }
}

/// One search per column of `table`, in catalog order.
pub fn search_all(table: &FeatureTable, kind: RuleKind, options: &SearchOptions) -> Result<Vec<ThresholdSearchResult>> {
    table.require_finalized("threshold search")?;
    let balanced;
    let data = match &options.balance {
        Some(cfg) => {
            balanced = smote_balance(table, cfg)?;
            &balanced
        }
        None => table,
    };
    (0..data.n_cols())
        .map(|c| {
            let mut r = search_column(&data.column(c), data.labels(), kind, options.snap_to_data)?;
            r.rule.feature = Some(data.features()[c]);
            Ok(r)
        })
        .collect()
}
