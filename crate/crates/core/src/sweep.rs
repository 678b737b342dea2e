//! Single-feature and feature-pair model sweeps, plus decision-mask grids.

use serde::{Deserialize, Serialize};

use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport, Protocol};
use crate::models::{Classifier, ModelSpec};

pub const DEFAULT_PAIR_TOP_K: usize = 40;
pub const DEFAULT_SIGNIFICANCE: f64 = 0.5;
pub const DEFAULT_MASK_POINTS: usize = 200;
const MASK_PADDING: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub features: Vec<FeatureNo>,
    pub report: EvalReport,
}

/// F1² descending, then feature numbers ascending.
pub fn sort_entries(entries: &mut [SweepEntry]) {
    entries.sort_by(|a, b| {
        b.report
            .f1_squared
            .total_cmp(&a.report.f1_squared)
            .then_with(|| a.features.cmp(&b.features))
    });
}

/// Runs `f` over `items` on all available cores; output order follows input.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

fn evaluate_subsets(
    table: &FeatureTable,
    spec: &ModelSpec,
    protocol: &Protocol,
    subsets: &[Vec<FeatureNo>],
) -> Result<Vec<SweepEntry>> {
    let results = par_map(subsets, |features| {
        let sub = table.select(features)?;
        let out = evaluate(&sub, spec, protocol)?;
        Ok(SweepEntry {
            features: features.clone(),
            report: out.report,
        })
    });
    let mut entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    sort_entries(&mut entries);
    Ok(entries)
}

/// One evaluation per column, ranked.
pub fn sweep_single(table: &FeatureTable, spec: &ModelSpec, protocol: &Protocol) -> Result<Vec<SweepEntry>> {
    table.require_finalized("sweep")?;
    let subsets: Vec<Vec<FeatureNo>> = table.features().iter().map(|&f| vec![f]).collect();
    evaluate_subsets(table, spec, protocol, &subsets)
}

/// Entries with F1² at or above `cutoff`, order kept.
pub fn significant_features(entries: &[SweepEntry], cutoff: f64) -> Vec<SweepEntry> {
    entries.iter().filter(|e| e.report.f1_squared >= cutoff).cloned().collect()
}

/// Evaluates every pair of columns and keeps the best `top_k` (all when `None`).
pub fn sweep_pairs(
    table: &FeatureTable,
    spec: &ModelSpec,
    protocol: &Protocol,
    top_k: Option<usize>,
) -> Result<Vec<SweepEntry>> {
    table.require_finalized("sweep")?;
    let f = table.features();
    if f.len() < 2 {
        return Err(Error::invalid("pair sweep needs at least 2 features"));
    }
    let subsets: Vec<Vec<FeatureNo>> = (0..f.len())
        .flat_map(|i| (i + 1..f.len()).map(move |j| vec![f[i], f[j]]))
        .collect();
    let mut entries = evaluate_subsets(table, spec, protocol, &subsets)?;
    if let Some(k) = top_k {
        entries.truncate(k);
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub feature: FeatureNo,
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.n_points == 1 {
            return 0.5 * (self.min + self.max);
        }
        self.min + (self.max - self.min) * i as f64 / (self.n_points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.value(i)).collect()
    }
}

/// Model predictions on a regular grid. For two axes, `labels` is row-major
/// with the first feature along x: index `iy * nx + ix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskGrid {
    pub features: Vec<FeatureNo>,
    pub axes: Vec<Axis>,
    pub labels: Vec<ClassLabel>,
}

impl MaskGrid {
    /// Grid coordinates of label `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [x] => vec![x.value(k)],
            [x, y] => vec![x.value(k % x.n_points), y.value(k / x.n_points)],
            _ => unreachable!("mask grids have one or two axes"),
        }
    }
}

fn padded_axis(table: &FeatureTable, feature: FeatureNo, n_points: usize) -> Result<Axis> {
    let col = table.feature_column(feature)?;
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { MASK_PADDING * (hi - lo) } else { (lo.abs() * MASK_PADDING).max(0.5) };
    Ok(Axis {
        feature,
        min: lo - pad,
        max: hi + pad,
        n_points,
    })
}

pub fn make_mask(
    model: &dyn Classifier,
    table: &FeatureTable,
    features: &[FeatureNo],
    n_points: usize,
) -> Result<MaskGrid> {
    if features.is_empty() || features.len() > 2 {
        return Err(Error::invalid("a mask needs one or two features"));
    }
    if n_points < 2 {
        return Err(Error::invalid("a mask needs at least 2 points per axis"));
    }
    let mut sorted = features.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != features.len() || sorted.as_slice() != model.features() {
        return Err(Error::FeatureMismatch(format!(
            "mask over {:?} but the model uses {:?}",
            features.iter().map(|f| f.get()).collect::<Vec<_>>(),
            model.features().iter().map(|f| f.get()).collect::<Vec<_>>()
        )));
    }
    let axes = sorted
        .iter()
        .map(|&f| padded_axis(table, f, n_points))
        .collect::<Result<Vec<_>>>()?;
    let total = axes.iter().map(|a| a.n_points).product();
    let mut grid = MaskGrid {
        features: sorted,
        axes,
        labels: Vec::with_capacity(total),
    };
    for k in 0..total {
        let p = grid.point(k);
        let label = model.decide(model.proba_row(&p));
        grid.labels.push(label);
    }
    Ok(grid)
}
