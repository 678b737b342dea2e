use std::path::{Path, PathBuf};

use rbv_core::datamodel::{finalize, generate_synthetic, load_csv, parse_feature_list, save_csv, FeatureNo};
use rbv_core::metrics::evaluate;
use rbv_core::models::{HgbConfig, ModelSpec};
use rbv_core::pipeline::report::*;
use rbv_core::pipeline::{self, RunConfig};
use rbv_core::resample::smote_balance;
use rbv_core::stats::{correlate, correlation_deltas, describe_all, select_features, CorrelationMethod, Scope};
use rbv_core::sweep::{sweep_pairs, sweep_single};
use rbv_core::threshold::{search_all, RuleKind, SearchOptions};
use rbv_core::{Error, FeatureTable, Result};
use serde::Serialize;

use crate::args::{Command, Common, Kind, ModelKind};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Defaults, then the config file, then explicit flags.
pub fn build_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &c.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = &c.label_column {
        cfg.label_column = v.clone();
    }
    if let Some(v) = &c.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = c.folds {
        cfg.folds = v;
    }
    cfg.paper_mode |= c.paper_mode;
    cfg.no_balance |= c.no_balance;
    cfg.snap_to_data |= c.snap_to_data;
    if let Some(v) = c.k {
        cfg.smote.k_neighbors = v;
    }
    if let Some(v) = c.ratio {
        cfg.smote.target_ratio = v;
    }
    let h = &c.hgb;
    let hgb = &mut cfg.hgb;
    if let Some(v) = h.learning_rate {
        hgb.learning_rate = v;
    }
    if let Some(v) = h.max_iter {
        hgb.max_iter = v;
    }
    if let Some(v) = h.max_leaves {
        hgb.max_leaves = v;
    }
    if let Some(v) = h.max_bins {
        hgb.max_bins = v;
    }
    if let Some(v) = h.l2 {
        hgb.l2 = v;
    }
    if let Some(v) = h.min_samples_leaf {
        hgb.min_samples_leaf = v;
    }
    cfg.validate()?;
    HgbConfig::validate(&cfg.hgb)?;
    Ok(cfg)
}

fn spec_for(kind: ModelKind, cfg: &RunConfig) -> Result<ModelSpec> {
    Ok(match kind {
        ModelKind::Hgb => ModelSpec::Hgb(cfg.hgb_config()),
        other => ModelSpec::parse_kind(other.as_str())?,
    })
}

struct Out<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
}

impl Out<'_> {
    fn new(cfg: &RunConfig) -> Result<Out<'_>> {
        let dir = cfg.output_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Out { cfg, dir })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn csv(&self, file: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let path = self.path(file);
        write_csv_file(&path, f)?;
        announce(&path);
        Ok(())
    }

    fn json<T: Serialize>(&self, file: &str, artifact: &str, data: &T) -> Result<()> {
        let path = self.path(file);
        write_json(&path, artifact, self.cfg, data)?;
        announce(&path);
        Ok(())
    }
}

fn announce(path: &Path) {
    say!("wrote {}", path.display());
}

fn selected_table(table: &FeatureTable, cfg: &RunConfig) -> Result<FeatureTable> {
    let selected = select_features(table, cfg.alpha)?;
    log::info!("{} of {} features selected at alpha {}", selected.len(), table.n_cols(), cfg.alpha);
    table.select(&selected)
}

fn feature_subset(table: &FeatureTable, cfg: &RunConfig, list: &str) -> Result<FeatureTable> {
    match list.trim() {
        "all-selected" => selected_table(table, cfg),
        "all" => Ok(table.clone()),
        other => table.select(&parse_feature_list(other)?),
    }
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    if let Command::Pipeline = command {
        let manifest = pipeline::run_pipeline(cfg)?;
        say!(
            "{} artifacts written to {}",
            manifest.artifacts.len(),
            cfg.output_dir.join(pipeline::MANIFEST_FILE).display()
        );
        return Ok(());
    }
    if let Command::Synth {
        marginals,
        n_survived,
        n_nonsurvived,
        out,
    } = command
    {
        let mut cfg = cfg.clone();
        if let Some(m) = marginals {
            cfg.synthetic.marginals = Some(m.clone());
        }
        if let Some(n) = n_survived {
            cfg.synthetic.n_survived = *n;
        }
        if let Some(n) = n_nonsurvived {
            cfg.synthetic.n_nonsurvived = *n;
        }
        let table = generate_synthetic(&cfg.synthetic_spec()?)?;
        let o = Out::new(&cfg)?;
        let path = out.clone().unwrap_or_else(|| o.path("synthetic.csv"));
        save_csv(&table, &path, &cfg.label_column)?;
        announce(&path);
        return Ok(());
    }

    if let Command::Ingest { out } = command {
        let raw = match &cfg.input {
            Some(p) => load_csv(p, &cfg.label_column)?,
            None => return Err(Error::invalid("ingest needs --input")),
        };
        let table = finalize(&raw, cfg.winsor_lower, cfg.winsor_upper)?;
        let o = Out::new(cfg)?;
        let path = out.clone().unwrap_or_else(|| o.path("cleaned.csv"));
        save_csv(&table, &path, &cfg.label_column)?;
        let [s, n] = table.class_counts();
        say!("{} rows ({s} survived, {n} non-survived), {} features", table.n_rows(), table.n_cols());
        announce(&path);
        return Ok(());
    }

    let table = pipeline::load_input(cfg)?;
    let o = Out::new(cfg)?;
    match command {
        Command::Describe => {
            let rows = describe_all(&table)?;
            let selected = select_features(&table, cfg.alpha)?;
            o.csv("table3_describe.csv", |w| write_describe_csv(w, &rows, &selected))?;
            o.json("table3_describe.json", "table3", &rows)?;
        }
        Command::Select => {
            let selected = select_features(&table, cfg.alpha)?;
            let excluded: Vec<FeatureNo> =
                table.features().iter().copied().filter(|f| !selected.contains(f)).collect();
            for f in &selected {
                say!("{}\t{}", f.get(), f.name());
            }
            #[derive(Serialize)]
            struct Selection<'a> {
                alpha: f64,
                selected: &'a [FeatureNo],
                excluded: &'a [FeatureNo],
            }
            let doc = Selection {
                alpha: cfg.alpha,
                selected: &selected,
                excluded: &excluded,
            };
            o.json("selected_features.json", "selection", &doc)?;
        }
        Command::Correlate { method, scope, top_k } => {
            let method = CorrelationMethod::parse(method)?;
            let scope = Scope::parse(scope)?;
            let report = correlate(&table, method, scope)?;
            let stem = format!("corr_{}_{}", method.as_str(), scope.as_str());
            o.csv(&format!("{stem}.csv"), |w| write_matrix_csv(w, &report))?;
            o.json(&format!("{stem}.json"), "correlation", &report)?;
            let deltas = correlation_deltas(&table, top_k.unwrap_or(cfg.delta_top_k))?;
            o.csv("table2_deltas.csv", |w| write_deltas_csv(w, &deltas))?;
            o.json("table2_deltas.json", "table2", &deltas)?;
        }
        Command::Balance { out } => {
            let smote = cfg.balance("cli").ok_or_else(|| Error::invalid("balance with --no-balance does nothing"))?;
            let balanced = smote_balance(&table, &smote)?;
            let path = out.clone().unwrap_or_else(|| o.path("balanced.csv"));
            save_csv(&balanced, &path, &cfg.label_column)?;
            let [s, n] = balanced.class_counts();
            say!("{} rows ({s} survived, {n} non-survived)", balanced.n_rows());
            announce(&path);
        }
        Command::Train { model, features, out } => {
            let spec = spec_for(*model, cfg)?;
            let sub = feature_subset(&table, cfg, features)?;
            let outcome = evaluate(&sub, &spec, &cfg.protocol())?;
            let train = match cfg.balance("train") {
                Some(smote) => smote_balance(&sub, &smote)?,
                None => sub.clone(),
            };
            let fitted = spec.fit(&train)?;
            let path = out.clone().unwrap_or_else(|| o.path(&format!("model_{}.json", spec.kind())));
            std::fs::write(&path, fitted.to_json()? + "\n").map_err(|e| Error::io(&path, e))?;
            announce(&path);
            #[derive(Serialize)]
            struct Train<'a> {
                model: &'a ModelSpec,
                features: &'a [FeatureNo],
                evaluation: &'a rbv_core::EvalReport,
            }
            let doc = Train {
                model: &spec,
                features: sub.features(),
                evaluation: &outcome.report,
            };
            o.json(&format!("train_{}.json", spec.kind()), "train", &doc)?;
            say!("{}: F1^2 = {}", spec.display_name(), fmt4(outcome.report.f1_squared));
        }
        Command::EvalModels => {
            let sub = selected_table(&table, cfg)?;
            let rows = pipeline::evaluate_models(&sub, &pipeline::baseline_specs(cfg), cfg)?;
            for r in &rows {
                say!("{}\t{}", r.model, fmt4(r.report.f1_squared));
            }
            o.csv("table4_models.csv", |w| write_models_csv(w, &rows))?;
            o.json("table4_models.json", "table4", &rows)?;
        }
        Command::Sweep {
            single,
            pairs,
            model,
            top_k,
        } => {
            if !single && !pairs {
                return Err(Error::invalid("sweep needs --single or --pairs"));
            }
            let spec = spec_for(*model, cfg)?;
            let sub = selected_table(&table, cfg)?;
            let protocol = cfg.protocol();
            if *single {
                let mut entries = sweep_single(&sub, &spec, &protocol)?;
                if let Some(k) = top_k {
                    entries.truncate(*k);
                }
                o.csv("tableA1_single.csv", |w| write_sweep_csv(w, &entries))?;
                o.json("tableA1_single.json", "tableA1", &entries)?;
            } else {
                let entries = sweep_pairs(&sub, &spec, &protocol, Some(top_k.unwrap_or(cfg.pair_top_k)))?;
                o.csv("table6_pairs.csv", |w| write_sweep_csv(w, &entries))?;
                o.json("table6_pairs.json", "table6", &entries)?;
            }
        }
        Command::Threshold { kind } => {
            let (kind, name, stem) = match kind {
                Kind::One => (RuleKind::One, "tableA2", "tableA2_one_threshold"),
                Kind::Two => (RuleKind::Two, "tableA3", "tableA3_two_threshold"),
            };
            let options = SearchOptions {
                balance: cfg.balance("threshold"),
                snap_to_data: cfg.snap_to_data,
            };
            let results = search_all(&table, kind, &options)?;
            o.csv(&format!("{stem}.csv"), |w| write_threshold_csv(w, &results))?;
            o.json(&format!("{stem}.json"), name, &results)?;
        }
        Command::Mask { features, model, points } => {
            let features = parse_feature_list(features)?;
            let spec = spec_for(*model, cfg)?;
            let mut cfg = cfg.clone();
            if let Some(p) = points {
                cfg.mask_points = *p;
            }
            cfg.validate()?;
            let (grid, rows) = pipeline::decision_mask(&table, &features, &spec, &cfg)?;
            let stem = format!("mask_{}d", features.len());
            o.csv(&format!("{stem}.csv"), |w| write_mask_csv(w, &grid))?;
            #[derive(Serialize)]
            struct MaskDoc<'a> {
                features: &'a [FeatureNo],
                axes: &'a [rbv_core::sweep::Axis],
                model: &'a ModelSpec,
                trained_on_rows: usize,
            }
            let doc = MaskDoc {
                features: &grid.features,
                axes: &grid.axes,
                model: &spec,
                trained_on_rows: rows,
            };
            o.json(&format!("{stem}.json"), &stem, &doc)?;
        }
        Command::Pipeline | Command::Synth { .. } | Command::Ingest { .. } => unreachable!(),
    }
    Ok(())
}
