use serde::{Deserialize, Serialize};

use super::ranks::midranks;
use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
    Kendall,
}

impl CorrelationMethod {
    pub const ALL: [CorrelationMethod; 3] = [Self::Pearson, Self::Spearman, Self::Kendall];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pearson => "pearson",
            Self::Spearman => "spearman",
            Self::Kendall => "kendall",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown correlation method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    Survived,
    NonSurvived,
}

impl Scope {
    pub const ALL: [Scope; 3] = [Scope::All, Scope::Survived, Scope::NonSurvived];

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Survived => "survived",
            Scope::NonSurvived => "non_survived",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::invalid(format!("unknown scope `{s}`")))
    }

    fn rows(self, table: &FeatureTable) -> Vec<usize> {
        match self {
            Scope::All => (0..table.n_rows()).collect(),
            Scope::Survived => table.class_rows(ClassLabel::Survived),
            Scope::NonSurvived => table.class_rows(ClassLabel::NonSurvived),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub method: CorrelationMethod,
    pub scope: Scope,
    pub features: Vec<FeatureNo>,
    pub matrix: Vec<Vec<f64>>,
    /// Columns that are constant within the scope; their off-diagonal entries are 0.
    pub constant_columns: Vec<FeatureNo>,
}

impl CorrelationReport {
    pub fn get(&self, a: FeatureNo, b: FeatureNo) -> Option<f64> {
        let i = self.features.binary_search(&a).ok()?;
        let j = self.features.binary_search(&b).ok()?;
        Some(self.matrix[i][j])
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&midranks(x).0, &midranks(y).0)
}

/// Number of pairs sharing a value in each run of equal keys.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut last: Option<T> = None;
    for v in sorted {
        if last.as_ref() == Some(&v) {
            run += 1;
        } else {
            total += run * (run.saturating_sub(1)) / 2;
            run = 1;
            last = Some(v);
        }
    }
    total + run * run.saturating_sub(1) / 2
}

/// Sorts `v` and returns the number of strict inversions.
fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            inv += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    inv
}

/// Kendall tau-b in O(n log n).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let ties_x = tied_pairs(idx.iter().map(|&i| x[i].to_bits()));
    let ties_xy = tied_pairs(idx.iter().map(|&i| (x[i].to_bits(), y[i].to_bits())));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = Vec::with_capacity(n);
    let discordant = count_inversions(&mut ys, &mut buf);
    let ties_y = tied_pairs(ys.iter().map(|v| v.to_bits()));
    let n0 = (n * n.saturating_sub(1) / 2) as u64;
    let den = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    if den == 0.0 {
        return None;
    }
    let num = n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * discordant as f64;
    Some((num / den).clamp(-1.0, 1.0))
}

pub fn correlation(method: CorrelationMethod, x: &[f64], y: &[f64]) -> Option<f64> {
    match method {
        CorrelationMethod::Pearson => pearson(x, y),
        CorrelationMethod::Spearman => spearman(x, y),
        CorrelationMethod::Kendall => kendall_tau_b(x, y),
    }
}

pub fn correlate(table: &FeatureTable, method: CorrelationMethod, scope: Scope) -> Result<CorrelationReport> {
    table.require_finalized("correlate")?;
    let rows = scope.rows(table);
    if rows.len() < 2 {
        return Err(Error::invalid(format!("correlate: scope {} has {} rows", scope.as_str(), rows.len())));
    }
    let mut cols: Vec<Vec<f64>> = (0..table.n_cols())
        .map(|c| rows.iter().map(|&r| table.get(r, c)).collect())
        .collect();
    let constant: Vec<bool> = cols.iter().map(|c| c.iter().all(|&v| v == c[0])).collect();
    if method == CorrelationMethod::Spearman {
        for c in cols.iter_mut() {
            *c = midranks(c).0;
        }
    }
    let d = cols.len();
    let mut matrix = vec![vec![0.0; d]; d];
    for i in 0..d {
        matrix[i][i] = 1.0;
        for j in i + 1..d {
            let r = if constant[i] || constant[j] {
                0.0
            } else {
                let m = if method == CorrelationMethod::Spearman { CorrelationMethod::Pearson } else { method };
                correlation(m, &cols[i], &cols[j]).unwrap_or(0.0)
            };
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    let constant_columns: Vec<FeatureNo> = table
        .features()
        .iter()
        .zip(&constant)
        .filter(|(_, &c)| c)
        .map(|(&f, _)| f)
        .collect();
    if !constant_columns.is_empty() {
        log::warn!(
            "{} {} correlation: {} constant column(s) set to 0",
            scope.as_str(),
            method.as_str(),
            constant_columns.len()
        );
    }
    Ok(CorrelationReport {
        method,
        scope,
        features: table.features().to_vec(),
        matrix,
        constant_columns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "Up",
            Direction::Down => "Down",
        }
    }
}

/// Change in the strength of one pair's correlation from the survived class
/// to the non-survived class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDelta {
    pub feature_a: FeatureNo,
    pub feature_b: FeatureNo,
    pub rho_survived: f64,
    pub rho_nonsurvived: f64,
    /// `|rho_nonsurvived| - |rho_survived|`.
    pub delta: f64,
    pub direction: Direction,
}

pub const DEFAULT_DELTA_TOP_K: usize = 41;

/// Pairs ranked by the change in absolute Spearman correlation between the
/// classes; `Up` means the pair is more strongly correlated among
/// non-survivors. `feature_a` is the higher feature number.
pub fn correlation_deltas(table: &FeatureTable, top_k: usize) -> Result<Vec<CorrelationDelta>> {
    let [ns, nn] = table.class_counts();
    if ns < 3 || nn < 3 {
        return Err(Error::SingleClass(format!(
            "correlation deltas need 3 rows per class, got {ns} and {nn}"
        )));
    }
    let surv = correlate(table, CorrelationMethod::Spearman, Scope::Survived)?;
    let non = correlate(table, CorrelationMethod::Spearman, Scope::NonSurvived)?;
    let d = table.n_cols();
    let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            let (rs, rn) = (surv.matrix[i][j], non.matrix[i][j]);
            let delta = rn.abs() - rs.abs();
            out.push(CorrelationDelta {
                feature_a: table.features()[j],
                feature_b: table.features()[i],
                rho_survived: rs,
                rho_nonsurvived: rn,
                delta,
                direction: if delta > 0.0 { Direction::Up } else { Direction::Down },
            });
        }
    }
    out.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then((a.feature_a, a.feature_b).cmp(&(b.feature_a, b.feature_b)))
    });
    out.truncate(top_k);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    fn kendall_naive(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                let sx = (x[i] - x[j]).signum() * (x[i] != x[j]) as i32 as f64;
                let sy = (y[i] - y[j]).signum() * (y[i] != y[j]) as i32 as f64;
                if sx == 0.0 && sy == 0.0 {
                } else if sx == 0.0 {
                    tx += 1;
                } else if sy == 0.0 {
                    ty += 1;
                } else if sx == sy {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
        (c - d) as f64 / (((c + d + tx) * (c + d + ty)) as f64).sqrt()
    }

    #[test]
    fn kendall_six_rows_by_hand() {
        let x = [1.0, 2.0, 2.0, 3.0, 5.0, 4.0];
        let y = [3.0, 1.0, 2.0, 2.0, 6.0, 6.0];
        let t = kendall_tau_b(&x, &y).unwrap();
        assert!((t - kendall_naive(&x, &y)).abs() < 1e-12);
        // reference: scipy.stats.kendalltau
        assert!((t - 0.44474958999666075).abs() < 1e-12);
    }

    #[test]
    fn kendall_matches_pair_count() {
        let mut r = rng(1);
        for _ in 0..100 {
            let n = r.random_range(2..60);
            let x: Vec<f64> = (0..n).map(|_| (r.random::<f64>() * 6.0).floor()).collect();
            let y: Vec<f64> = (0..n).map(|_| (r.random::<f64>() * 6.0).floor()).collect();
            match kendall_tau_b(&x, &y) {
                Some(t) => assert!((t - kendall_naive(&x, &y)).abs() < 1e-12),
                None => assert!(x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0])),
            }
        }
    }

    #[test]
    fn perfect_and_monotone_relations() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.3).collect();
        let lin: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        for m in CorrelationMethod::ALL {
            assert!((correlation(m, &x, &lin).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((spearman(&x, &ex).unwrap() - 1.0).abs() < 1e-12);
        assert!(pearson(&x, &ex).unwrap() < 0.99);
    }

    fn random_table(seed: u64, n: usize, constant_col: bool) -> FeatureTable {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a: f64 = r.random();
                vec![a, a + r.random::<f64>(), if constant_col { 2.0 } else { r.random() }, r.random::<f64>() - a]
            })
            .collect();
        let labels = (0..n).map(|i| ClassLabel::from_code((i % 3 == 0) as u8).unwrap()).collect();
        let f = [1, 5, 9, 20].iter().map(|&v| FeatureNo::new(v).unwrap()).collect();
        FeatureTable::from_rows(f, &rows, labels).unwrap()
    }

    #[test]
    fn matrices_are_symmetric_with_unit_diagonal() {
        for seed in 0..100 {
            let t = random_table(seed, 25, seed % 10 == 0);
            for m in CorrelationMethod::ALL {
                let rep = correlate(&t, m, Scope::All).unwrap();
                for i in 0..4 {
                    assert_eq!(rep.matrix[i][i], 1.0);
                    for j in 0..4 {
                        assert_eq!(rep.matrix[i][j], rep.matrix[j][i]);
                        assert!(rep.matrix[i][j].abs() <= 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_column_is_flagged() {
        let t = random_table(3, 20, true);
        let rep = correlate(&t, CorrelationMethod::Kendall, Scope::NonSurvived).unwrap();
        assert_eq!(rep.constant_columns, vec![FeatureNo::new(9).unwrap()]);
        assert_eq!(rep.matrix[2][0], 0.0);
        assert_eq!(rep.matrix[2][2], 1.0);
    }

    #[test]
    fn deltas_vanish_for_identical_classes() {
        let t = random_table(4, 30, false);
        let rows: Vec<Vec<f64>> = (0..60).map(|i| t.row(i % 30).to_vec()).collect();
        let labels = (0..60).map(|i| ClassLabel::from_code((i >= 30) as u8).unwrap()).collect();
        let twin = FeatureTable::from_rows(t.features().to_vec(), &rows, labels).unwrap();
        for d in correlation_deltas(&twin, 100).unwrap() {
            assert_eq!(d.delta, 0.0);
            assert_eq!(d.direction, Direction::Down);
        }
    }

    #[test]
    fn top_delta_is_found() {
        let t = random_table(5, 60, false).select(&[1, 5, 20].map(|v| FeatureNo::new(v).unwrap())).unwrap();
        let top = correlation_deltas(&t, 1).unwrap();
        assert_eq!(top.len(), 1);
        let mut best = (0.0f64, (0, 0));
        for i in 0..3 {
            for j in i + 1..3 {
                let s: Vec<f64> = t.class_column(i, ClassLabel::Survived);
                let s2: Vec<f64> = t.class_column(j, ClassLabel::Survived);
                let n: Vec<f64> = t.class_column(i, ClassLabel::NonSurvived);
                let n2: Vec<f64> = t.class_column(j, ClassLabel::NonSurvived);
                let d = spearman(&n, &n2).unwrap().abs() - spearman(&s, &s2).unwrap().abs();
                if d.abs() > best.0.abs() {
                    best = (d, (j, i));
                }
            }
        }
        assert!((top[0].delta - best.0).abs() < 1e-12);
        assert_eq!(top[0].feature_a, t.features()[best.1 .0]);
        assert_eq!(top[0].feature_b, t.features()[best.1 .1]);
    }
}
