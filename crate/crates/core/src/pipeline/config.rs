use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datamodel::{
    load_marginals, SyntheticSpec, DEFAULT_CLASS_SIZES, DEFAULT_LABEL_COLUMN, DEFAULT_WINSOR,
};
use crate::error::{Error, Result};
use crate::metrics::{Evaluation, Protocol};
use crate::models::HgbConfig;
use crate::resample::SmoteConfig;
use crate::seed::derive_seed;
use crate::stats::DEFAULT_DELTA_TOP_K;
use crate::sweep::{DEFAULT_MASK_POINTS, DEFAULT_PAIR_TOP_K, DEFAULT_SIGNIFICANCE};

/// Where the synthetic cohort comes from when no input CSV is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSettings {
    /// Marginals file; the bundled one when absent.
    pub marginals: Option<PathBuf>,
    pub n_survived: usize,
    pub n_nonsurvived: usize,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            marginals: None,
            n_survived: DEFAULT_CLASS_SIZES.0,
            n_nonsurvived: DEFAULT_CLASS_SIZES.1,
        }
    }
}

/// Every setting a run depends on. Embedded in each JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Input CSV; a synthetic cohort is generated when absent.
    pub input: Option<PathBuf>,
    pub label_column: String,
    pub synthetic: SynthSettings,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub alpha: f64,
    pub winsor_lower: f64,
    pub winsor_upper: f64,
    pub smote: SmoteConfig,
    pub hgb: HgbConfig,
    /// Overrides the k-fold default when set.
    pub evaluation: Option<Evaluation>,
    pub folds: usize,
    pub paper_mode: bool,
    pub no_balance: bool,
    pub snap_to_data: bool,
    pub significance_cutoff: f64,
    pub pair_top_k: usize,
    pub delta_top_k: usize,
    pub mask_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            synthetic: SynthSettings::default(),
            output_dir: PathBuf::from("rbv-output"),
            seed: 0,
            alpha: 0.05,
            winsor_lower: DEFAULT_WINSOR.0,
            winsor_upper: DEFAULT_WINSOR.1,
            smote: SmoteConfig::default(),
            hgb: HgbConfig::default(),
            evaluation: None,
            folds: 5,
            paper_mode: false,
            no_balance: false,
            snap_to_data: false,
            significance_cutoff: DEFAULT_SIGNIFICANCE,
            pair_top_k: DEFAULT_PAIR_TOP_K,
            delta_top_k: DEFAULT_DELTA_TOP_K,
            mask_points: DEFAULT_MASK_POINTS,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if self.folds < 2 && self.evaluation.is_none() {
            return Err(Error::invalid("folds must be at least 2"));
        }
        if self.mask_points < 2 {
            return Err(Error::invalid("mask_points must be at least 2"));
        }
        Ok(())
    }

    /// SMOTE settings, or `None` under `no_balance`.
    pub fn balance(&self, stream: &str) -> Option<SmoteConfig> {
        (!self.no_balance).then(|| self.smote.with_seed(derive_seed(derive_seed(self.seed, "smote"), stream)))
    }

    pub fn protocol(&self) -> Protocol {
        Protocol {
            evaluation: self.evaluation.unwrap_or(Evaluation::CrossValidated { folds: self.folds }),
            balance: self.balance("protocol"),
            paper_mode: self.paper_mode,
            seed: self.seed,
        }
    }

    pub fn hgb_config(&self) -> HgbConfig {
        HgbConfig {
            seed: self.seed,
            ..self.hgb.clone()
        }
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticSpec> {
        let mut spec = SyntheticSpec::bundled(derive_seed(self.seed, "synth"));
        if let Some(path) = &self.synthetic.marginals {
            spec.marginals = load_marginals(path)?;
        }
        spec.n_survived = self.synthetic.n_survived;
        spec.n_nonsurvived = self.synthetic.n_nonsurvived;
        spec.validate()?;
        Ok(spec)
    }
}
