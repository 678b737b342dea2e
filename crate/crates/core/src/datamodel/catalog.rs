use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of routine blood-value features in the catalog.
pub const N_FEATURES: usize = 38;

/// 1-based feature number in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct FeatureNo(u8);

impl FeatureNo {
    pub fn new(no: u8) -> Result<Self> {
        if (1..=N_FEATURES as u8).contains(&no) {
            Ok(FeatureNo(no))
        } else {
            Err(Error::invalid(format!("feature number {no} outside 1..={N_FEATURES}")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position in the full catalog.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn name(self) -> &'static str {
        CATALOG[self.index()].1
    }

    pub fn unit(self) -> &'static str {
        CATALOG[self.index()].2
    }

    pub fn all() -> impl Iterator<Item = FeatureNo> {
        (1..=N_FEATURES as u8).map(FeatureNo)
    }
}

impl TryFrom<u8> for FeatureNo {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        FeatureNo::new(value)
    }
}

impl From<FeatureNo> for u8 {
    fn from(value: FeatureNo) -> u8 {
        value.0
    }
}

impl fmt::Display for FeatureNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.0, self.name())
    }
}

const CATALOG: [(u8, &str, &str); N_FEATURES] = [
    (1, "ALT", "U/L"),
    (2, "AST", "U/L"),
    (3, "Albumin", "g/L"),
    (4, "ALP", "U/L"),
    (5, "Amylase", "U/L"),
    (6, "CK-MB", "U/L"),
    (7, "D-Bil", "mg/dL"),
    (8, "Glucose", "mg/dL"),
    (9, "Creatinine", "mg/dL"),
    (10, "CK", "U/L"),
    (11, "LDH", "U/L"),
    (12, "eGFR", ""),
    (13, "UA", "mg/dL"),
    (14, "BASO", "10^3/uL"),
    (15, "EOS", "10^3/uL"),
    (16, "HCT", "%"),
    (17, "HGB", "g/L"),
    (18, "LYM", "10^3/uL"),
    (19, "MCH", "pg"),
    (20, "MCHC", "g/dL"),
    (21, "MCV", "fL"),
    (22, "MONO", "10^3/uL"),
    (23, "MPV", "fL"),
    (24, "NEU", "10^3/uL"),
    (25, "PLT", "10^3/uL"),
    (26, "RBC", "10^6/uL"),
    (27, "RDW", "%"),
    (28, "WBC", "10^3/uL"),
    (29, "CRP", "mg/L"),
    (30, "D-dimer", "ug/L"),
    (31, "Ferritin", "ug/L"),
    (32, "Fibrinogen", "mg/dL"),
    (33, "INR", ""),
    (34, "PT", "s"),
    (35, "PCT", "ng/mL"),
    (36, "ESR", "mm/h"),
    (37, "Troponin", "ng/L"),
    (38, "aPTT", "s"),
];

/// The fixed 38-entry feature numbering.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub feature_no: FeatureNo,
    pub name: &'static str,
    pub unit: &'static str,
}

impl FeatureCatalog {
    pub fn entries(&self) -> impl Iterator<Item = CatalogEntry> {
        CATALOG.iter().map(|&(no, name, unit)| CatalogEntry {
            feature_no: FeatureNo(no),
            name,
            unit,
        })
    }

    pub fn len(&self) -> usize {
        N_FEATURES
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Case-insensitive lookup. A trailing period is ignored so that
    /// spellings like `D-Bil.` resolve.
    pub fn lookup(&self, name: &str) -> Option<FeatureNo> {
        let wanted = name.trim().trim_end_matches('.');
        CATALOG
            .iter()
            .find(|(_, n, _)| n.eq_ignore_ascii_case(wanted))
            .map(|&(no, _, _)| FeatureNo(no))
    }

    pub fn resolve(&self, name: &str) -> Result<FeatureNo> {
        self.lookup(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }
}

/// Parses a comma-separated list of feature numbers or names.
pub fn parse_feature_list(spec: &str) -> Result<Vec<FeatureNo>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let no = match item.parse::<u8>() {
            Ok(n) => FeatureNo::new(n)?,
            Err(_) => FeatureCatalog.resolve(item)?,
        };
        if !out.contains(&no) {
            out.push(no);
        }
    }
    out.sort();
    Ok(out)
}
