use serde::{Deserialize, Serialize};

use crate::datamodel::{ClassLabel, FeatureNo, FeatureTable};
use crate::error::{Error, Result};

const GINI_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DtConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for DtConfig {
    fn default() -> Self {
        DtConfig {
            max_depth: 10,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum DtNode {
    Split {
        feature_no: FeatureNo,
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Fraction of non-survived training rows in the leaf.
        p_nonsurv: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub features: Vec<FeatureNo>,
    pub nodes: Vec<DtNode>,
    pub config: DtConfig,
}

impl DecisionTree {
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                DtNode::Leaf { p_nonsurv } => return *p_nonsurv,
                DtNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if row[*column] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[DtNode], id: usize) -> usize {
            match &nodes[id] {
                DtNode::Leaf { .. } => 0,
                DtNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn gini(n0: f64, n1: f64) -> f64 {
    let n = n0 + n1;
    if n == 0.0 {
        return 0.0;
    }
    1.0 - (n0 / n).powi(2) - (n1 / n).powi(2)
}

struct Builder<'a> {
    table: &'a FeatureTable,
    y: Vec<bool>,
    cfg: &'a DtConfig,
    nodes: Vec<DtNode>,
}

impl Builder<'_> {
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let n = rows.len() as f64;
        let n1 = rows.iter().filter(|&&r| self.y[r]).count() as f64;
        let parent = gini(n - n1, n1);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
        for col in 0..self.table.n_cols() {
            order.clear();
            order.extend(rows.iter().map(|&r| (self.table.get(r, col), self.y[r])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut l0, mut l1) = (0.0, 0.0);
            for i in 0..order.len() - 1 {
                if order[i].1 {
                    l1 += 1.0;
                } else {
                    l0 += 1.0;
                }
                if order[i].0 == order[i + 1].0 {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = n - nl;
                if (nl as usize) < self.cfg.min_samples_leaf || (nr as usize) < self.cfg.min_samples_leaf {
                    continue;
                }
                let child = (nl * gini(l0, l1) + nr * gini(n - n1 - l0, n1 - l1)) / n;
                let decrease = parent - child;
                let better = match best {
                    None => decrease > GINI_TIE_TOL,
                    Some((_, _, d)) => decrease > d + GINI_TIE_TOL,
                };
                if better {
                    best = Some((col, 0.5 * (order[i].0 + order[i + 1].0), decrease));
                }
            }
        }
        best.map(|(c, t, _)| (c, t))
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let n1 = rows.iter().filter(|&&r| self.y[r]).count();
        self.nodes.push(DtNode::Leaf {
            p_nonsurv: n1 as f64 / rows.len() as f64,
        });
        let pure = n1 == 0 || n1 == rows.len();
        if pure || depth >= self.cfg.max_depth || rows.len() < self.cfg.min_samples_split {
            return id;
        }
        let Some((col, threshold)) = self.best_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.table.get(i, col) <= threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = DtNode::Split {
            feature_no: self.table.features()[col],
            column: col,
            threshold,
            left,
            right,
        };
        id
    }
}

pub fn fit_decision_tree(table: &FeatureTable, config: &DtConfig) -> Result<DecisionTree> {
    table.require_both_classes("decision tree")?;
    table.require_finalized("decision tree")?;
    if config.min_samples_leaf == 0 {
        return Err(Error::invalid("min_samples_leaf must be at least 1"));
    }
    let y = table.labels().iter().map(|&l| l == ClassLabel::NonSurvived).collect();
    let mut b = Builder {
        table,
        y,
        cfg: config,
        nodes: Vec::new(),
    };
    b.build((0..table.n_rows()).collect(), 0);
    Ok(DecisionTree {
        features: table.features().to_vec(),
        nodes: b.nodes,
        config: config.clone(),
    })
}
