//! CSV and JSON writers for every report table.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::datamodel::FeatureNo;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::stats::{CorrelationDelta, CorrelationReport, FeatureSummary};
use crate::sweep::{MaskGrid, SweepEntry};
use crate::threshold::{Bounds, ThresholdSearchResult};

/// Metrics are rounded to 4 decimals in CSV; JSON keeps full precision.
pub fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

const METRIC_HEADER: [&str; 9] = [
    "f1_squared",
    "precision_surv",
    "precision_nonsurv",
    "recall_surv",
    "recall_nonsurv",
    "f1_surv",
    "f1_nonsurv",
    "accuracy",
    "a_th",
];

fn metric_cells(r: &EvalReport) -> Vec<String> {
    [
        r.f1_squared,
        r.precision_surv,
        r.precision_nonsurv,
        r.recall_surv,
        r.recall_nonsurv,
        r.f1_surv,
        r.f1_nonsurv,
        r.accuracy,
        r.a_th,
    ]
    .iter()
    .map(|&v| fmt4(v))
    .collect()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn header(extra: &[&str], metrics: bool) -> Vec<String> {
    let mut h: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    if metrics {
        h.extend(METRIC_HEADER.iter().map(|s| s.to_string()));
    }
    h
}

pub fn write_describe_csv<W: Write>(w: W, rows: &[FeatureSummary], selected: &[FeatureNo]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(header(
        &[
            "feature_no",
            "name",
            "unit",
            "surv_median",
            "surv_q25",
            "surv_q75",
            "nonsurv_median",
            "nonsurv_q25",
            "nonsurv_q75",
            "u_statistic",
            "p_value",
            "selected",
        ],
        false,
    ))?;
    for s in rows {
        out.write_record([
            s.feature.get().to_string(),
            s.feature.name().to_string(),
            s.feature.unit().to_string(),
            s.survived.median.to_string(),
            s.survived.q25.to_string(),
            s.survived.q75.to_string(),
            s.non_survived.median.to_string(),
            s.non_survived.q25.to_string(),
            s.non_survived.q75.to_string(),
            s.mann_whitney.statistic.to_string(),
            format!("{:.6e}", s.mann_whitney.p_value),
            selected.contains(&s.feature).to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_deltas_csv<W: Write>(w: W, deltas: &[CorrelationDelta]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["no_a", "no_b", "name_a", "name_b", "rho_surv", "rho_nonsurv", "direction"])?;
    for d in deltas {
        out.write_record([
            d.feature_a.get().to_string(),
            d.feature_b.get().to_string(),
            d.feature_a.name().to_string(),
            d.feature_b.name().to_string(),
            fmt4(d.rho_survived),
            fmt4(d.rho_nonsurvived),
            d.direction.as_str().to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Square matrix with feature names as header row and first column.
pub fn write_matrix_csv<W: Write>(w: W, report: &CorrelationReport) -> Result<()> {
    let mut out = writer(w);
    let mut h = vec!["feature".to_string()];
    h.extend(report.features.iter().map(|f| f.name().to_string()));
    out.write_record(&h)?;
    for (f, row) in report.features.iter().zip(&report.matrix) {
        let mut rec = vec![f.name().to_string()];
        rec.extend(row.iter().map(|&v| fmt4(v)));
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub report: EvalReport,
}

pub fn write_models_csv<W: Write>(w: W, rows: &[ModelRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(header(&["model"], true))?;
    for r in rows {
        let mut rec = vec![r.model.clone()];
        rec.extend(metric_cells(&r.report));
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Single-feature or pair sweep table, ranked.
pub fn write_sweep_csv<W: Write>(w: W, entries: &[SweepEntry]) -> Result<()> {
    let mut out = writer(w);
    let pairs = entries.first().is_some_and(|e| e.features.len() == 2);
    if pairs {
        out.write_record(header(&["rank", "no_a", "no_b", "name_a", "name_b"], true))?;
    } else {
        out.write_record(header(&["rank", "feature_no", "name"], true))?;
    }
    for (i, e) in entries.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(e.features.iter().map(|f| f.get().to_string()));
        rec.extend(e.features.iter().map(|f| f.name().to_string()));
        rec.extend(metric_cells(&e.report));
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_threshold_csv<W: Write>(w: W, results: &[ThresholdSearchResult]) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "feature_no",
        "name",
        "type",
        "v_th1",
        "v_th2",
        "a_th",
        "precision_surv",
        "precision_nonsurv",
        "recall_surv",
        "recall_nonsurv",
        "f1_surv",
        "f1_nonsurv",
        "f1_squared",
    ])?;
    for r in results {
        let (no, name) = match r.rule.feature {
            Some(f) => (f.get().to_string(), f.name().to_string()),
            None => (String::new(), String::new()),
        };
        let (v1, v2) = match r.rule.bounds {
            Bounds::One { v_th } => (v_th.to_string(), String::new()),
            Bounds::Two { v_th1, v_th2 } => (v_th1.to_string(), v_th2.to_string()),
        };
        let m = &r.report;
        let mut rec = vec![no, name, u8::from(r.rule.rule_type).to_string(), v1, v2];
        rec.extend(
            [
                r.a_th,
                m.precision_surv,
                m.precision_nonsurv,
                m.recall_surv,
                m.recall_nonsurv,
                m.f1_surv,
                m.f1_nonsurv,
                m.f1_squared,
            ]
            .iter()
            .map(|&v| fmt4(v)),
        );
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// One significant single feature with the F1² of each method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantRow {
    pub feature: FeatureNo,
    pub hgb_f1_squared: f64,
    pub one_threshold_f1_squared: Option<f64>,
    pub two_threshold_f1_squared: Option<f64>,
}

pub fn write_significant_csv<W: Write>(w: W, rows: &[SignificantRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "rank",
        "feature_no",
        "name",
        "hgb_f1_squared",
        "one_threshold_f1_squared",
        "two_threshold_f1_squared",
    ])?;
    let opt = |v: Option<f64>| v.map(fmt4).unwrap_or_default();
    for (i, r) in rows.iter().enumerate() {
        out.write_record([
            (i + 1).to_string(),
            r.feature.get().to_string(),
            r.feature.name().to_string(),
            fmt4(r.hgb_f1_squared),
            opt(r.one_threshold_f1_squared),
            opt(r.two_threshold_f1_squared),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// One row per grid point: coordinates then the 0/1 label.
pub fn write_mask_csv<W: Write>(w: W, grid: &MaskGrid) -> Result<()> {
    let mut out = writer(w);
    let mut h: Vec<String> = grid.features.iter().map(|f| f.name().to_string()).collect();
    h.push("label".into());
    out.write_record(&h)?;
    for (k, label) in grid.labels.iter().enumerate() {
        let mut rec: Vec<String> = grid.point(k).iter().map(|v| v.to_string()).collect();
        rec.push(label.code().to_string());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// JSON report with the run configuration attached.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub artifact: String,
    pub seed: u64,
    pub config: RunConfig,
    pub data: T,
}

pub fn write_json<T: Serialize>(path: &Path, artifact: &str, config: &RunConfig, data: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        artifact: &'a str,
        seed: u64,
        config: &'a RunConfig,
        data: &'a T,
    }
    let doc = Borrowed {
        artifact,
        seed: config.seed,
        config,
        data,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_csv_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
