//! Descriptive statistics, hypothesis tests, feature selection and
//! correlation analysis.

mod correlate;
mod describe;
mod ranks;

pub use correlate::{
    correlate, correlation, correlation_deltas, kendall_tau_b, pearson, spearman, CorrelationDelta,
    CorrelationMethod, CorrelationReport, Direction, Scope, DEFAULT_DELTA_TOP_K,
};
pub use describe::{describe, describe_all, quartiles, select_features, FeatureSummary};
pub use ranks::midranks;
pub use tests::{
    levene, mann_whitney, mann_whitney_exact_p, mann_whitney_normal_p, shapiro_wilk, TestResult, MW_EXACT_MAX_N,
};
