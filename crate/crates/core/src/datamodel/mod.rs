//! Data schema, ingestion, cleaning and synthetic surrogates.

pub mod catalog;
pub mod clean;
pub mod csvio;
pub mod synth;
pub mod table;

pub use catalog::{parse_feature_list, FeatureCatalog, FeatureNo, N_FEATURES};
pub use clean::{finalize, impute_mean, percentile, percentile_sorted, winsorize, DEFAULT_WINSOR};
pub use csvio::{load_csv, read_csv, save_csv, write_csv, DEFAULT_LABEL_COLUMN};
pub use synth::{
    generate_synthetic, load_marginals, parse_marginals, FeatureMarginals, Quartiles, SyntheticSpec,
    BUNDLED_MARGINALS, DEFAULT_CLASS_SIZES,
};
pub use table::{ClassLabel, FeatureTable};
