//! Synthetic surrogate tables drawn from per-class quartile marginals.
//!
//! Each (feature, class) marginal is matched by a shifted log-normal whose
//! median equals the target median exactly and whose quartiles fit the target
//! quartiles in least squares. Rows with `q25 == median == q75` become
//! constant columns. Columns are independent unless a Spearman target is
//! supplied, in which case a Gaussian copula couples them.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::catalog::{FeatureCatalog, FeatureNo};
use super::table::{ClassLabel, FeatureTable};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

/// Default marginals transcribed from the reference cohort's descriptive table.
pub const BUNDLED_MARGINALS: &str = include_str!("../../data/table3_marginals.json");

pub const DEFAULT_CLASS_SIZES: (usize, usize) = (2364, 233);

/// Upper-quartile point of the standard normal.
const Z75: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl Quartiles {
    pub fn new(median: f64, q25: f64, q75: f64) -> Self {
        Quartiles { median, q25, q75 }
    }

    fn validate(&self, feature: FeatureNo, class: ClassLabel) -> Result<()> {
        let ok = [self.median, self.q25, self.q75].iter().all(|v| v.is_finite())
            && self.q25 <= self.median
            && self.median <= self.q75;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{feature} / {class}: need q25 <= median <= q75, got {:?}",
                self
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureMarginals {
    pub survived: Quartiles,
    pub non_survived: Quartiles,
}

impl FeatureMarginals {
    pub fn for_class(&self, class: ClassLabel) -> Quartiles {
        match class {
            ClassLabel::Survived => self.survived,
            ClassLabel::NonSurvived => self.non_survived,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub marginals: BTreeMap<FeatureNo, FeatureMarginals>,
    pub n_survived: usize,
    pub n_nonsurvived: usize,
    pub seed: u64,
    /// Optional Spearman target over the spec's features, in catalog order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spearman_target: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct FileRow {
    survived: [f64; 3],
    non_survived: [f64; 3],
}

/// Parses a marginals document: a JSON object keyed by feature name whose
/// values are `{"survived": [median, q25, q75], "non_survived": [...]}`.
pub fn parse_marginals(json: &str) -> Result<BTreeMap<FeatureNo, FeatureMarginals>> {
    let raw: BTreeMap<String, FileRow> = serde_json::from_str(json)?;
    let mut out = BTreeMap::new();
    for (name, row) in raw {
        let feature = FeatureCatalog.resolve(&name)?;
        let q = |a: [f64; 3]| Quartiles::new(a[0], a[1], a[2]);
        let m = FeatureMarginals {
            survived: q(row.survived),
            non_survived: q(row.non_survived),
        };
        if out.insert(feature, m).is_some() {
            return Err(Error::DuplicateColumn(name));
        }
    }
    Ok(out)
}

pub fn load_marginals(path: impl AsRef<Path>) -> Result<BTreeMap<FeatureNo, FeatureMarginals>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_marginals(&text)
}

impl SyntheticSpec {
    /// Bundled marginals with the reference cohort's class sizes.
    pub fn bundled(seed: u64) -> Self {
        SyntheticSpec {
            marginals: parse_marginals(BUNDLED_MARGINALS).expect("bundled marginals parse"),
            n_survived: DEFAULT_CLASS_SIZES.0,
            n_nonsurvived: DEFAULT_CLASS_SIZES.1,
            seed,
            spearman_target: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_survived == 0 || self.n_nonsurvived == 0 {
            return Err(Error::invalid("class sizes must be positive"));
        }
        if self.marginals.is_empty() {
            return Err(Error::invalid("no feature marginals"));
        }
        for (&f, m) in &self.marginals {
            m.survived.validate(f, ClassLabel::Survived)?;
            m.non_survived.validate(f, ClassLabel::NonSurvived)?;
        }
        if let Some(target) = &self.spearman_target {
            let n = self.marginals.len();
            if target.len() != n || target.iter().any(|r| r.len() != n) {
                return Err(Error::invalid(format!("spearman target must be {n}x{n}")));
            }
        }
        Ok(())
    }
}

/// Fitted marginal: either a constant or `shift + exp(mu + sigma * Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedMarginal {
    Constant(f64),
    LogNormal { shift: f64, mu: f64, sigma: f64 },
}

impl FittedMarginal {
    pub fn quantile_of_normal(&self, z: f64) -> f64 {
        match *self {
            FittedMarginal::Constant(v) => v,
            FittedMarginal::LogNormal { shift, mu, sigma } => shift + (mu + sigma * z).exp(),
        }
    }

    pub fn median(&self) -> f64 {
        self.quantile_of_normal(0.0)
    }
}

pub fn fit_marginal(q: &Quartiles) -> FittedMarginal {
    if q.q25 == q.median && q.median == q.q75 {
        return FittedMarginal::Constant(q.median);
    }
    let shift = if q.q25 > 0.0 { 0.0 } else { q.q25 - (q.q75 - q.q25) };
    let lower = q.q25 - shift;
    let upper = q.q75 - shift;
    let center = q.median - shift;
    let mu = center.ln();
    // Least squares over t = Z75 * sigma >= 0.
    let loss = |t: f64| {
        let dl = lower - center * (-t).exp();
        let du = upper - center * t.exp();
        dl * dl + du * du
    };
    let spread = (upper / center).ln().max((center / lower).ln()).max(1e-6);
    let t_max = 2.0 * spread + 1.0;
    const GRID: usize = 4000;
    let step = t_max / GRID as f64;
    let best = (0..=GRID)
        .map(|i| i as f64 * step)
        .min_by(|&a, &b| loss(a).total_cmp(&loss(b)))
        .unwrap_or(0.0);
    // golden-section refinement inside the neighbouring grid cells
    let (mut a, mut b) = ((best - step).max(0.0), best + step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if loss(c) <= loss(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    FittedMarginal::LogNormal {
        shift,
        mu,
        sigma: t / Z75,
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FeatureTable> {
    spec.validate()?;
    let features: Vec<FeatureNo> = spec.marginals.keys().copied().collect();
    let n_cols = features.len();
    let n_rows = spec.n_survived + spec.n_nonsurvived;
    let mut values = vec![0.0; n_rows * n_cols];
    let mut labels = Vec::with_capacity(n_rows);
    labels.extend(std::iter::repeat_n(ClassLabel::Survived, spec.n_survived));
    labels.extend(std::iter::repeat_n(ClassLabel::NonSurvived, spec.n_nonsurvived));

    let copula = spec
        .spearman_target
        .as_ref()
        .map(|target| copula_factor(target))
        .transpose()?;

    let mut row_start = 0;
    for class in ClassLabel::BOTH {
        let n = match class {
            ClassLabel::Survived => spec.n_survived,
            ClassLabel::NonSurvived => spec.n_nonsurvived,
        };
        let fitted: Vec<FittedMarginal> = spec
            .marginals
            .values()
            .map(|m| fit_marginal(&m.for_class(class)))
            .collect();
        match &copula {
            None => {
                for (col, (feature, fit)) in features.iter().zip(&fitted).enumerate() {
                    let stream = format!("synth/{}/{}", feature.get(), class.code());
                    let mut r = rng(derive_seed(spec.seed, &stream));
                    for i in 0..n {
                        let z: f64 = match fit {
                            FittedMarginal::Constant(_) => 0.0,
                            FittedMarginal::LogNormal { .. } => r.sample(StandardNormal),
                        };
                        values[(row_start + i) * n_cols + col] = fit.quantile_of_normal(z);
                    }
                }
            }
            Some(chol) => {
                let mut r = rng(derive_seed(spec.seed, &format!("synth/copula/{}", class.code())));
                let mut eps = vec![0.0; n_cols];
                for i in 0..n {
                    for e in eps.iter_mut() {
                        *e = r.sample(StandardNormal);
                    }
                    for col in 0..n_cols {
                        let z: f64 = (0..=col).map(|k| chol[col][k] * eps[k]).sum();
                        values[(row_start + i) * n_cols + col] = fitted[col].quantile_of_normal(z);
                    }
                }
            }
        }
        row_start += n;
    }
    let missing = vec![false; values.len()];
    FeatureTable::new(features, values, labels, missing)
}

/// Lower Cholesky factor of the Gaussian correlation matching a Spearman
/// target (`r = 2 sin(pi rho / 6)`), with diagonal jitter if needed.
fn copula_factor(target: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = target.len();
    let mut corr = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let rho = if i == j { 1.0 } else { 0.5 * (target[i][j] + target[j][i]) };
            if !(-1.0..=1.0).contains(&rho) {
                return Err(Error::invalid(format!("spearman target entry {rho} outside [-1, 1]")));
            }
            corr[i][j] = 2.0 * (std::f64::consts::PI * rho / 6.0).sin();
        }
    }
    let mut jitter = 0.0;
    for _ in 0..30 {
        if let Some(l) = cholesky(&corr, jitter) {
            return Ok(l);
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
    }
    Err(Error::Degenerate("spearman target is not positive semi-definite".into()))
}

fn cholesky(a: &[Vec<f64>], jitter: f64) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = 1.0 / (1.0 + jitter).sqrt();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let aij = if i == j { 1.0 + jitter } else { a[i][j] };
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = aij - s;
                if d <= 0.0 {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (aij - s) / l[j][j];
            }
        }
    }
    // rescale to unit marginal variance
    for row in l.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Some(l)
}
