use serde::{Deserialize, Serialize};

use super::bins::{fit_bins, BinMapper, BinnedData, DEFAULT_MAX_BINS};
use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::{Error, Result};

/// Relative tolerance under which two split gains count as tied.
pub(crate) const GAIN_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HgbConfig {
    pub max_bins: usize,
    pub learning_rate: f64,
    pub max_iter: usize,
    pub max_leaves: usize,
    pub l2: f64,
    pub min_samples_leaf: usize,
    /// Echoed into reports; the learner itself draws no random numbers.
    pub seed: u64,
}

impl Default for HgbConfig {
    fn default() -> Self {
        HgbConfig {
            max_bins: DEFAULT_MAX_BINS,
            learning_rate: 0.1,
            max_iter: 100,
            max_leaves: 31,
            l2: 1.0,
            min_samples_leaf: 20,
            seed: 0,
        }
    }
}

impl HgbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("l2 must be non-negative"));
        }
        if self.max_leaves < 2 {
            return Err(Error::invalid("max_leaves must be at least 2"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature_no: FeatureNo,
        column: usize,
        bin_threshold: u8,
        /// Raw-value form of the bin threshold: `x <= threshold` goes left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if row[*column] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn root_split(&self) -> Option<(FeatureNo, f64)> {
        match self.nodes.first()? {
            TreeNode::Split {
                feature_no,
                threshold,
                ..
            } => Some((*feature_no, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub features: Vec<FeatureNo>,
    pub bin_mapper: BinMapper,
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub config: HgbConfig,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl BoostedEnsemble {
    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.predict_raw(row))
    }

    /// The ensemble restricted to its first `n` trees.
    pub fn truncated(&self, n: usize) -> BoostedEnsemble {
        BoostedEnsemble {
            trees: self.trees[..n.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

#[derive(Clone)]
struct Histogram {
    g: Vec<f64>,
    h: Vec<f64>,
    c: Vec<u32>,
}

impl Histogram {
    fn zeros(len: usize) -> Self {
        Histogram {
            g: vec![0.0; len],
            h: vec![0.0; len],
            c: vec![0; len],
        }
    }

    fn subtract(&self, other: &Histogram) -> Histogram {
        Histogram {
            g: self.g.iter().zip(&other.g).map(|(a, b)| a - b).collect(),
            h: self.h.iter().zip(&other.h).map(|(a, b)| a - b).collect(),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a - b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitInfo {
    gain: f64,
    col: usize,
    bin: u8,
}

struct Leaf {
    node: usize,
    rows: Vec<u32>,
    hist: Histogram,
    sum_g: f64,
    sum_h: f64,
    split: Option<SplitInfo>,
}

struct Grower<'a> {
    binned: &'a BinnedData,
    offsets: Vec<usize>,
    grad: &'a [f64],
    hess: &'a [f64],
    l2: f64,
    min_leaf: usize,
}

impl Grower<'_> {
    fn build_hist(&self, rows: &[u32]) -> Histogram {
        let mut hist = Histogram::zeros(*self.offsets.last().unwrap());
        for (col, bins) in self.binned.columns.iter().enumerate() {
            let off = self.offsets[col];
            for &r in rows {
                let r = r as usize;
                let b = off + bins[r] as usize;
                hist.g[b] += self.grad[r];
                hist.h[b] += self.hess[r];
                hist.c[b] += 1;
            }
        }
        hist
    }

    fn best_split(&self, hist: &Histogram, sum_g: f64, sum_h: f64, n: usize) -> Option<SplitInfo> {
        if n < 2 * self.min_leaf {
            return None;
        }
        let parent = sum_g * sum_g / (sum_h + self.l2);
        let mut best: Option<SplitInfo> = None;
        for col in 0..self.binned.columns.len() {
            let (lo, hi) = (self.offsets[col], self.offsets[col + 1]);
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for b in lo..hi - 1 {
                gl += hist.g[b];
                hl += hist.h[b];
                cl += hist.c[b] as usize;
                if cl < self.min_leaf {
                    continue;
                }
                if n - cl < self.min_leaf {
                    break;
                }
                let (gr, hr) = (sum_g - gl, sum_h - hl);
                let gain = gl * gl / (hl + self.l2) + gr * gr / (hr + self.l2) - parent;
                if !gain.is_finite() {
                    continue;
                }
                let better = match best {
                    None => gain > 0.0,
                    Some(s) => gain - s.gain > GAIN_TIE_TOL * s.gain.abs(),
                };
                if better {
                    best = Some(SplitInfo {
                        gain,
                        col,
                        bin: (b - lo) as u8,
                    });
                }
            }
        }
        best
    }

    fn make_leaf(&self, node: usize, rows: Vec<u32>, hist: Histogram) -> Leaf {
        // any single column's bins sum to the node totals
        let end = self.offsets[1];
        let sum_g: f64 = hist.g[..end].iter().sum();
        let sum_h: f64 = hist.h[..end].iter().sum();
        let split = self.best_split(&hist, sum_g, sum_h, rows.len());
        Leaf {
            node,
            rows,
            hist,
            sum_g,
            sum_h,
            split,
        }
    }
}

/// Grows one tree and adds its output to `raw`. Returns `None` when the root
/// has no admissible split with positive gain.
fn grow_tree(
    grower: &Grower,
    mapper: &BinMapper,
    features: &[FeatureNo],
    cfg: &HgbConfig,
    raw: &mut [f64],
) -> Option<Tree> {
    let n = raw.len();
    let all: Vec<u32> = (0..n as u32).collect();
    let root_hist = grower.build_hist(&all);
    let root = grower.make_leaf(0, all, root_hist);
    root.split?;

    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut leaves = vec![root];
    while leaves.len() < cfg.max_leaves {
        let mut pick: Option<usize> = None;
        for (i, leaf) in leaves.iter().enumerate() {
            if let Some(s) = leaf.split {
                let better = match pick {
                    None => true,
                    Some(p) => s.gain > leaves[p].split.unwrap().gain,
                };
                if better {
                    pick = Some(i);
                }
            }
        }
        let Some(i) = pick else { break };
        let leaf = leaves.swap_remove(i);
        let s = leaf.split.unwrap();
        let bins = &grower.binned.columns[s.col];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            leaf.rows.iter().partition(|&&r| bins[r as usize] <= s.bin);
        let (left_id, right_id) = (nodes.len(), nodes.len() + 1);
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[leaf.node] = TreeNode::Split {
            feature_no: features[s.col],
            column: s.col,
            bin_threshold: s.bin,
            threshold: mapper.threshold(s.col, s.bin),
            left: left_id,
            right: right_id,
        };
        let (small_hist, small_left) = if left_rows.len() <= right_rows.len() {
            (grower.build_hist(&left_rows), true)
        } else {
            (grower.build_hist(&right_rows), false)
        };
        let large_hist = leaf.hist.subtract(&small_hist);
        let (lh, rh) = if small_left {
            (small_hist, large_hist)
        } else {
            (large_hist, small_hist)
        };
        leaves.push(grower.make_leaf(left_id, left_rows, lh));
        leaves.push(grower.make_leaf(right_id, right_rows, rh));
    }

    for leaf in &leaves {
        let value = -leaf.sum_g / (leaf.sum_h + cfg.l2) * cfg.learning_rate;
        let value = if value.is_finite() { value } else { 0.0 };
        nodes[leaf.node] = TreeNode::Leaf { value };
        for &r in &leaf.rows {
            raw[r as usize] += value;
        }
    }
    Some(Tree { nodes })
}

pub fn fit_hgb(table: &FeatureTable, config: &HgbConfig) -> Result<BoostedEnsemble> {
    config.validate()?;
    table.require_both_classes("fit_hgb")?;
    table.require_finalized("fit_hgb")?;
    if table.n_cols() == 0 {
        return Err(Error::invalid("fit_hgb: table has no feature columns"));
    }
    let mapper = fit_bins(table, config.max_bins)?;
    let binned = mapper.transform(table);
    let mut offsets = vec![0usize];
    for &nb in &binned.n_bins {
        offsets.push(offsets.last().unwrap() + nb);
    }

    let y: Vec<f64> = table
        .labels()
        .iter()
        .map(|&l| if l == ClassLabel::NonSurvived { 1.0 } else { 0.0 })
        .collect();
    let n = y.len();
    let prior = y.iter().sum::<f64>() / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();
    let mut raw = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::new();

    for _ in 0..config.max_iter {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        let grower = Grower {
            binned: &binned,
            offsets: offsets.clone(),
            grad: &grad,
            hess: &hess,
            l2: config.l2,
            min_leaf: config.min_samples_leaf,
        };
        match grow_tree(&grower, &mapper, table.features(), config, &mut raw) {
            Some(tree) => trees.push(tree),
            None => break,
        }
    }

    Ok(BoostedEnsemble {
        features: table.features().to_vec(),
        bin_mapper: mapper,
        trees,
        learning_rate: config.learning_rate,
        base_score,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    fn fno(n: u8) -> FeatureNo {
        FeatureNo::new(n).unwrap()
    }

    fn label(nonsurv: bool) -> ClassLabel {
        if nonsurv {
            ClassLabel::NonSurvived
        } else {
            ClassLabel::Survived
        }
    }

    fn table(features: &[u8], rows: Vec<Vec<f64>>, labels: Vec<ClassLabel>) -> FeatureTable {
        FeatureTable::from_rows(features.iter().map(|&f| fno(f)).collect(), &rows, labels).unwrap()
    }

    fn train_accuracy(m: &BoostedEnsemble, t: &FeatureTable) -> f64 {
        let hits = (0..t.n_rows())
            .filter(|&i| label(m.predict_proba_row(t.row(i)) >= 0.5) == t.labels()[i])
            .count();
        hits as f64 / t.n_rows() as f64
    }

    fn log_loss(m: &BoostedEnsemble, t: &FeatureTable) -> f64 {
        (0..t.n_rows())
            .map(|i| {
                let z = m.predict_raw(t.row(i));
                let y = if t.labels()[i] == ClassLabel::NonSurvived { 1.0 } else { 0.0 };
                // log(1 + e^z) - y z, computed stably
                z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
            })
            .sum::<f64>()
            / t.n_rows() as f64
    }

    #[test]
    fn separable_single_feature() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 10.0]).collect();
        let labels = (0..100).map(|i| label(i >= 50)).collect();
        let t = table(&[1], rows, labels);
        let m = fit_hgb(&t, &HgbConfig::default()).unwrap();
        assert!(!m.trees.is_empty());
        assert_eq!(m.trees[0].root_split().unwrap().1, 4.95);
        assert_eq!(train_accuracy(&m, &t), 1.0);
    }

    #[test]
    fn xor_layout_is_learned() {
        let mut r = rng(3);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (0.0, 4.0), (4.0, 0.0), (4.0, 4.0)] {
            for _ in 0..50 {
                rows.push(vec![cx + r.random::<f64>() - 0.5, cy + r.random::<f64>() - 0.5]);
                labels.push(label((cx > 1.0) != (cy > 1.0)));
            }
        }
        let t = table(&[1, 2], rows, labels);
        // leaves must be allowed to be smaller than a cluster fragment
        let cfg = HgbConfig {
            max_iter: 20,
            min_samples_leaf: 1,
            ..HgbConfig::default()
        };
        let m = fit_hgb(&t, &cfg).unwrap();
        assert_eq!(train_accuracy(&m, &t), 1.0);
    }

    #[test]
    fn root_split_matches_exhaustive_search() {
        let cfg = HgbConfig {
            min_samples_leaf: 3,
            max_iter: 1,
            ..HgbConfig::default()
        };
        for trial in 0..50 {
            let mut r = rng(100 + trial);
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..3).map(|_| (r.random::<f64>() * 8.0).round()).collect())
                .collect();
            let labels: Vec<ClassLabel> = rows
                .iter()
                .map(|row| label(row[0] + row[1] + r.random::<f64>() * 6.0 > 10.0))
                .collect();
            if labels.iter().all(|&l| l == labels[0]) {
                continue;
            }
            let t = table(&[1, 2, 3], rows.clone(), labels.clone());
            let m = fit_hgb(&t, &cfg).unwrap();

            // independent oracle: gradients at the prior, every midpoint split
            let y: Vec<f64> = labels.iter().map(|&l| (l == ClassLabel::NonSurvived) as u8 as f64).collect();
            let p = y.iter().sum::<f64>() / 20.0;
            let g: Vec<f64> = y.iter().map(|yi| p - yi).collect();
            let h = p * (1.0 - p);
            let score = |gs: f64, hs: f64| gs * gs / (hs + cfg.l2);
            let total: f64 = g.iter().sum();
            let mut cands = Vec::new();
            for f in 0..3 {
                let mut vals: Vec<f64> = rows.iter().map(|row| row[f]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                for w in vals.windows(2) {
                    let thr = 0.5 * (w[0] + w[1]);
                    let left: Vec<usize> = (0..20).filter(|&i| rows[i][f] <= thr).collect();
                    let nl = left.len();
                    if nl < 3 || 20 - nl < 3 {
                        continue;
                    }
                    let gl: f64 = left.iter().map(|&i| g[i]).sum();
                    let gain = score(gl, h * nl as f64)
                        + score(total - gl, h * (20 - nl) as f64)
                        - score(total, h * 20.0);
                    cands.push((f, thr, gain));
                }
            }
            let best = cands.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
            let expected = if best > 0.0 {
                cands
                    .iter()
                    .find(|c| best - c.2 <= GAIN_TIE_TOL * best.abs())
                    .map(|c| (fno(c.0 as u8 + 1), c.1))
            } else {
                None
            };
            let got = m.trees.first().and_then(|t| t.root_split());
            assert_eq!(got, expected, "trial {trial}");
        }
    }

    #[test]
    fn zero_tree_model_predicts_prior() {
        // identical rows: no split is possible
        let rows = vec![vec![1.0]; 40];
        let labels = (0..40).map(|i| label(i % 2 == 0)).collect();
        let t = table(&[4], rows, labels);
        let m = fit_hgb(&t, &HgbConfig::default()).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.base_score, 0.0);
        assert_eq!(m.predict_proba_row(&[123.0]), 0.5);
    }

    #[test]
    fn pure_leaf_newton_step() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels = (0..10).map(|i| label(i >= 7)).collect();
        let t = table(&[1], rows, labels);
        let cfg = HgbConfig {
            learning_rate: 1.0,
            l2: 0.0,
            max_iter: 1,
            max_leaves: 2,
            min_samples_leaf: 1,
            ..HgbConfig::default()
        };
        let m = fit_hgb(&t, &cfg).unwrap();
        let p: f64 = 0.3;
        let base = (p / (1.0 - p)).ln();
        // leaf of survivors: G = 7p, H = 7p(1-p)  =>  step = -1/(1-p)
        let surv = super::sigmoid(base - 1.0 / (1.0 - p));
        // leaf of non-survivors: G = 3(p-1), H = 3p(1-p)  =>  step = 1/p
        let non = super::sigmoid(base + 1.0 / p);
        assert!((m.predict_proba_row(&[0.0]) - surv).abs() < 1e-12);
        assert!((m.predict_proba_row(&[9.0]) - non).abs() < 1e-12);
    }

    fn noisy_table(seed: u64, n: usize) -> FeatureTable {
        let mut r = rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let a = r.random::<f64>() * 10.0;
            let b = r.random::<f64>() * 10.0;
            rows.push(vec![a, b, r.random::<f64>()]);
            labels.push(label(a + 0.5 * b + 3.0 * r.random::<f64>() > 8.0));
        }
        table(&[1, 2, 3], rows, labels)
    }

    #[test]
    fn loss_never_increases() {
        let t = noisy_table(9, 400);
        let cfg = HgbConfig {
            max_iter: 30,
            ..HgbConfig::default()
        };
        let m = fit_hgb(&t, &cfg).unwrap();
        let mut prev = log_loss(&m.truncated(0), &t);
        for k in 1..=m.trees.len() {
            let cur = log_loss(&m.truncated(k), &t);
            assert!(cur <= prev + 1e-12, "round {k}: {cur} > {prev}");
            prev = cur;
        }
    }

    #[test]
    fn leaves_respect_min_samples() {
        let t = noisy_table(10, 300);
        let cfg = HgbConfig {
            max_iter: 10,
            min_samples_leaf: 25,
            ..HgbConfig::default()
        };
        let m = fit_hgb(&t, &cfg).unwrap();
        for tree in &m.trees {
            let mut counts = vec![0usize; tree.nodes.len()];
            for i in 0..t.n_rows() {
                let row = t.row(i);
                let mut id = 0;
                while let TreeNode::Split { column, threshold, left, right, .. } = &tree.nodes[id] {
                    id = if row[*column] <= *threshold { *left } else { *right };
                }
                counts[id] += 1;
            }
            for (id, node) in tree.nodes.iter().enumerate() {
                if matches!(node, TreeNode::Leaf { .. }) {
                    assert!(counts[id] >= 25);
                }
            }
            assert!(tree.n_leaves() <= cfg.max_leaves);
        }
    }

    #[test]
    fn deterministic_and_scale_invariant() {
        let t = noisy_table(12, 300);
        let cfg = HgbConfig {
            max_iter: 15,
            ..HgbConfig::default()
        };
        let a = fit_hgb(&t, &cfg).unwrap();
        let b = fit_hgb(&t, &cfg).unwrap();
        assert_eq!(a, b);

        let scaled_rows: Vec<Vec<f64>> = (0..t.n_rows())
            .map(|i| t.row(i).iter().map(|v| v.powi(3) * 2.0 + 1.0).collect())
            .collect();
        let s = table(&[1, 2, 3], scaled_rows.clone(), t.labels().to_vec());
        let c = fit_hgb(&s, &cfg).unwrap();
        for i in 0..t.n_rows() {
            let pa = a.predict_proba_row(t.row(i));
            let pc = c.predict_proba_row(&scaled_rows[i]);
            assert!((pa - pc).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_signal_gives_monotone_probabilities() {
        let mut r = rng(21);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..600 {
            let a = r.random::<f64>() * 10.0;
            rows.push(vec![a, r.random::<f64>()]);
            labels.push(label(a > 6.0));
        }
        let t = table(&[1, 2], rows, labels);
        let m = fit_hgb(&t, &HgbConfig::default()).unwrap();
        let mut prev = 0.0;
        for k in 0..=100 {
            let p = m.predict_proba_row(&[k as f64 / 10.0, 0.5]);
            assert!(p > 0.0 && p < 1.0);
            assert!(p >= prev - 1e-12, "grid {k}");
            prev = p;
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = noisy_table(13, 200);
        let cfg = HgbConfig {
            max_iter: 5,
            ..HgbConfig::default()
        };
        let m = fit_hgb(&t, &cfg).unwrap();
        let back = BoostedEnsemble::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn single_class_is_rejected() {
        let t = table(&[1], vec![vec![1.0], vec![2.0]], vec![ClassLabel::Survived; 2]);
        assert!(matches!(fit_hgb(&t, &HgbConfig::default()), Err(Error::SingleClass(_))));
    }
}
