use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rbv", version, about = "Blood-value mortality analysis: feature selection, boosting, lethal-level thresholds")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags given here take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Input CSV; the bundled synthetic cohort is used when absent.
    #[arg(long, short, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub label_column: Option<String>,
    #[arg(long, short, global = true, env = "RBV_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Balance the whole table before splitting.
    #[arg(long, global = true)]
    pub paper_mode: bool,
    /// Skip SMOTE everywhere.
    #[arg(long, global = true)]
    pub no_balance: bool,
    /// Report observed data values as thresholds instead of midpoints.
    #[arg(long, global = true)]
    pub snap_to_data: bool,
    /// SMOTE neighbour count.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// SMOTE minority/majority target ratio.
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    #[command(flatten)]
    pub hgb: HgbFlags,
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct HgbFlags {
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub max_leaves: Option<usize>,
    #[arg(long, global = true)]
    pub max_bins: Option<usize>,
    #[arg(long, global = true)]
    pub l2: Option<f64>,
    #[arg(long, global = true)]
    pub min_samples_leaf: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Hgb,
    Dt,
    Knn,
    Gnb,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Hgb => "hgb",
            ModelKind::Dt => "dt",
            ModelKind::Knn => "knn",
            ModelKind::Gnb => "gnb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    One,
    Two,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, winsorize and impute a CSV; write the cleaned table.
    Ingest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic cohort from quartile marginals.
    Synth {
        #[arg(long)]
        marginals: Option<PathBuf>,
        #[arg(long)]
        n_survived: Option<usize>,
        #[arg(long)]
        n_nonsurvived: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-class quartiles and Mann-Whitney tests.
    Describe,
    /// Features with Mann-Whitney p below alpha.
    Select,
    /// Correlation matrices and survived/non-survived deltas.
    Correlate {
        #[arg(long, default_value = "spearman")]
        method: String,
        #[arg(long, default_value = "all")]
        scope: String,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Oversample the minority class with SMOTE.
    Balance {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one model and evaluate it.
    Train {
        #[arg(long, value_enum, default_value = "hgb")]
        model: ModelKind,
        /// Comma-separated numbers or names, or `all-selected`.
        #[arg(long, default_value = "all-selected")]
        features: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare HGB against the baselines on the selected features.
    EvalModels,
    /// Rank single features or feature pairs by cross-validated F1².
    Sweep {
        #[arg(long, conflicts_with = "pairs")]
        single: bool,
        #[arg(long)]
        pairs: bool,
        #[arg(long, value_enum, default_value = "hgb")]
        model: ModelKind,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Exhaustive one- or two-threshold search per feature.
    Threshold {
        #[arg(long, value_enum, default_value = "one")]
        kind: Kind,
    },
    /// Decision mask on a regular grid for one or two features.
    Mask {
        #[arg(long)]
        features: String,
        #[arg(long, value_enum, default_value = "hgb")]
        model: ModelKind,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Every stage in order, with a manifest of hashed outputs.
    Pipeline,
}
