//! End-to-end analysis run: one CSV/JSON pair per report table, plus a
//! manifest with content hashes.

mod config;
pub mod report;

pub use config::{RunConfig, SynthSettings};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datamodel::{finalize, generate_synthetic, load_csv, FeatureNo, FeatureTable};
use crate::error::{Error, Result};
use crate::models::{DtConfig, GnbConfig, KnnConfig, ModelSpec};
use crate::metrics::evaluate;
use crate::stats::{correlate, correlation_deltas, describe_all, spearman, CorrelationMethod, Scope};
use crate::resample::smote_balance;
use crate::sweep::{make_mask, MaskGrid, significant_features, sweep_pairs, sweep_single};
use crate::threshold::{search_all, RuleKind, SearchOptions};
use report::*;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub files: Vec<FileHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub timestamp: String,
    pub seed: u64,
    pub config: RunConfig,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    pub artifacts: Vec<Artifact>,
}

/// `SOURCE_DATE_EPOCH` when set (reproducible builds convention), else now.
pub fn default_timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Loads the configured input (or synthesizes one) and finalizes it.
pub fn load_input(config: &RunConfig) -> Result<FeatureTable> {
    let raw = match &config.input {
        Some(path) => load_csv(path, &config.label_column)?,
        None => generate_synthetic(&config.synthetic_spec()?)?,
    };
    finalize(&raw, config.winsor_lower, config.winsor_upper)
}

pub fn baseline_specs(config: &RunConfig) -> Vec<ModelSpec> {
    vec![
        ModelSpec::Hgb(config.hgb_config()),
        ModelSpec::Knn(KnnConfig::default()),
        ModelSpec::Dt(DtConfig::default()),
        ModelSpec::Gnb(GnbConfig::default()),
    ]
}

/// Evaluates every model on `table` under the run's protocol, best first.
pub fn evaluate_models(table: &FeatureTable, specs: &[ModelSpec], config: &RunConfig) -> Result<Vec<ModelRow>> {
    let protocol = config.protocol();
    let mut rows = specs
        .iter()
        .map(|spec| {
            Ok(ModelRow {
                model: spec.display_name().to_string(),
                report: evaluate(table, spec, &protocol)?.report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.report.f1_squared.total_cmp(&a.report.f1_squared));
    Ok(rows)
}

/// Fits `spec` on `features` (SMOTE-balanced unless disabled) and samples
/// its decisions over the observed range. Returns the grid and the number
/// of training rows.
pub fn decision_mask(
    table: &FeatureTable,
    features: &[FeatureNo],
    spec: &ModelSpec,
    config: &RunConfig,
) -> Result<(MaskGrid, usize)> {
    let sub = table.select(features)?;
    let train = match config.balance("mask") {
        Some(smote) => smote_balance(&sub, &smote)?,
        None => sub.clone(),
    };
    let model = spec.fit(&train)?;
    let grid = make_mask(&model, &sub, features, config.mask_points)?;
    Ok((grid, train.n_rows()))
}

struct Run<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Run<'_> {
    fn record(&mut self, name: &str, files: &[&str]) -> Result<()> {
        let files = files
            .iter()
            .map(|f| {
                Ok(FileHash {
                    path: f.to_string(),
                    sha256: sha256_file(&self.dir.join(f))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.artifacts.push(Artifact {
            name: name.to_string(),
            files,
        });
        Ok(())
    }

    fn csv(&self, file: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        write_csv_file(&self.dir.join(file), f)
    }

    fn json<T: Serialize>(&self, file: &str, artifact: &str, data: &T) -> Result<()> {
        write_json(&self.dir.join(file), artifact, self.config, data)
    }
}

#[derive(Debug, Clone, Serialize)]
struct LabelCorrelation {
    feature: FeatureNo,
    spearman: f64,
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    log::info!("stage {name}");
    f().map_err(|e| Error::Stage {
        stage: name.to_string(),
        source: Box::new(e),
    })
}

fn run_stages(run: &mut Run) -> Result<()> {
    let config = run.config;
    let table = stage("ingest", || load_input(config))?;
    log::info!("{} rows, {} features, classes {:?}", table.n_rows(), table.n_cols(), table.class_counts());

    let selected = stage("describe", || {
        let summaries = describe_all(&table)?;
        let selected: Vec<FeatureNo> = summaries
            .iter()
            .filter(|s| s.mann_whitney.p_value < config.alpha)
            .map(|s| s.feature)
            .collect();
        run.csv("table3_describe.csv", |w| write_describe_csv(w, &summaries, &selected))?;
        #[derive(Serialize)]
        struct Describe<'a> {
            alpha: f64,
            selected: &'a [FeatureNo],
            features: &'a [crate::stats::FeatureSummary],
        }
        let doc = Describe {
            alpha: config.alpha,
            selected: &selected,
            features: &summaries,
        };
        run.json("table3_describe.json", "table3", &doc)?;
        run.record("table3", &["table3_describe.csv", "table3_describe.json"])?;
        Ok(selected)
    })?;
    log::info!("{} features selected at alpha {}", selected.len(), config.alpha);
    if selected.len() < 2 {
        return Err(Error::Stage {
            stage: "select".into(),
            source: Box::new(Error::Degenerate(format!("only {} features selected", selected.len()))),
        });
    }
    let chosen = table.select(&selected)?;

    stage("correlate", || {
        let mut matrices = Vec::new();
        for method in CorrelationMethod::ALL {
            for scope in Scope::ALL {
                matrices.push(correlate(&table, method, scope)?);
            }
        }
        let y: Vec<f64> = table.labels().iter().map(|l| l.code() as f64).collect();
        let label_corr: Vec<LabelCorrelation> = (0..table.n_cols())
            .map(|c| LabelCorrelation {
                feature: table.features()[c],
                spearman: spearman(&table.column(c), &y).unwrap_or(0.0),
            })
            .collect();
        let deltas = correlation_deltas(&table, config.delta_top_k)?;
        run.csv("table2_deltas.csv", |w| write_deltas_csv(w, &deltas))?;
        run.csv("spearman_all.csv", |w| write_matrix_csv(w, &matrices[3]))?;
        #[derive(Serialize)]
        struct Corr<'a> {
            deltas: &'a [crate::stats::CorrelationDelta],
            label_correlations: &'a [LabelCorrelation],
            matrices: &'a [crate::stats::CorrelationReport],
        }
        let doc = Corr {
            deltas: &deltas,
            label_correlations: &label_corr,
            matrices: &matrices,
        };
        run.json("table2_correlations.json", "table2", &doc)?;
        run.record("table2", &["table2_deltas.csv", "spearman_all.csv", "table2_correlations.json"])
    })?;

    stage("eval-models", || {
        let rows = evaluate_models(&chosen, &baseline_specs(config), config)?;
        run.csv("table4_models.csv", |w| write_models_csv(w, &rows))?;
        run.json("table4_models.json", "table4", &rows)?;
        run.record("table4", &["table4_models.csv", "table4_models.json"])
    })?;

    let hgb = ModelSpec::Hgb(config.hgb_config());
    let protocol = config.protocol();
    let singles = stage("sweep-single", || {
        let singles = sweep_single(&chosen, &hgb, &protocol)?;
        run.csv("tableA1_single.csv", |w| write_sweep_csv(w, &singles))?;
        run.json("tableA1_single.json", "tableA1", &singles)?;
        run.record("tableA1", &["tableA1_single.csv", "tableA1_single.json"])?;
        Ok(singles)
    })?;

    let options = SearchOptions {
        balance: config.balance("threshold"),
        snap_to_data: config.snap_to_data,
    };
    let mut searches = Vec::new();
    for (kind, name, file) in [
        (RuleKind::One, "tableA2", "tableA2_one_threshold"),
        (RuleKind::Two, "tableA3", "tableA3_two_threshold"),
    ] {
        let res = stage(&format!("threshold-{}", if kind == RuleKind::One { "one" } else { "two" }), || {
            let res = search_all(&table, kind, &options)?;
            run.csv(&format!("{file}.csv"), |w| write_threshold_csv(w, &res))?;
            run.json(&format!("{file}.json"), name, &res)?;
            run.record(name, &[&format!("{file}.csv"), &format!("{file}.json")])?;
            Ok(res)
        })?;
        searches.push(res);
    }

    stage("significant", || {
        let sig = significant_features(&singles, config.significance_cutoff);
        let f1_of = |res: &[crate::threshold::ThresholdSearchResult], f: FeatureNo| {
            res.iter().find(|r| r.rule.feature == Some(f)).map(|r| r.report.f1_squared)
        };
        let rows: Vec<SignificantRow> = sig
            .iter()
            .map(|e| SignificantRow {
                feature: e.features[0],
                hgb_f1_squared: e.report.f1_squared,
                one_threshold_f1_squared: f1_of(&searches[0], e.features[0]),
                two_threshold_f1_squared: f1_of(&searches[1], e.features[0]),
            })
            .collect();
        run.csv("table5_significant.csv", |w| write_significant_csv(w, &rows))?;
        #[derive(Serialize)]
        struct Sig<'a> {
            cutoff: f64,
            features: &'a [SignificantRow],
        }
        let doc = Sig {
            cutoff: config.significance_cutoff,
            features: &rows,
        };
        run.json("table5_significant.json", "table5", &doc)?;
        run.record("table5", &["table5_significant.csv", "table5_significant.json"])
    })?;

    let pairs = stage("sweep-pairs", || {
        let pairs = sweep_pairs(&chosen, &hgb, &protocol, Some(config.pair_top_k))?;
        run.csv("table6_pairs.csv", |w| write_sweep_csv(w, &pairs))?;
        run.json("table6_pairs.json", "table6", &pairs)?;
        run.record("table6", &["table6_pairs.csv", "table6_pairs.json"])?;
        Ok(pairs)
    })?;

    for (name, features) in [("mask_1d", singles[0].features.clone()), ("mask_2d", pairs[0].features.clone())] {
        stage(name, || {
            let (grid, rows) = decision_mask(&chosen, &features, &hgb, config)?;
            run.csv(&format!("{name}.csv"), |w| write_mask_csv(w, &grid))?;
            #[derive(Serialize)]
            struct MaskDoc<'a> {
                features: &'a [FeatureNo],
                axes: &'a [crate::sweep::Axis],
                layout: &'static str,
                model: &'a ModelSpec,
                trained_on_rows: usize,
            }
            let doc = MaskDoc {
                features: &grid.features,
                axes: &grid.axes,
                layout: "row-major, first feature along x: index = iy * nx + ix",
                model: &hgb,
                trained_on_rows: rows,
            };
            run.json(&format!("{name}.json"), name, &doc)?;
            run.record(name, &[&format!("{name}.csv"), &format!("{name}.json")])
        })?;
    }
    Ok(())
}

/// Runs the whole analysis, stamping the manifest with [`default_timestamp`].
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest> {
    run_pipeline_at(config, &default_timestamp())
}

/// Runs the whole analysis. The manifest is written even when a stage fails;
/// it then carries `status = "failed"` and the failing stage.
pub fn run_pipeline_at(config: &RunConfig, timestamp: &str) -> Result<Manifest> {
    config.validate()?;
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut run = Run {
        config,
        dir: dir.clone(),
        artifacts: Vec::new(),
    };
    let outcome = run_stages(&mut run);
    let failure = outcome.as_ref().err().map(|e| match e {
        Error::Stage { stage, source } => StageFailure {
            stage: stage.clone(),
            message: source.to_string(),
        },
        other => StageFailure {
            stage: "pipeline".into(),
            message: other.to_string(),
        },
    });
    let manifest = Manifest {
        timestamp: timestamp.to_string(),
        seed: config.seed,
        config: config.clone(),
        status: if failure.is_some() { "failed" } else { "ok" }.to_string(),
        failure,
        artifacts: run.artifacts,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    outcome.map(|_| manifest)
}
