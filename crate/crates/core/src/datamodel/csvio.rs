//! CSV ingestion and writing.
//!
//! Input: UTF-8, comma-separated, one header row of catalog feature names plus
//! a label column. Columns may appear in any order; the loaded table is always
//! in catalog order. Missing cells (empty, `NA`, `NaN`, `null`) are flagged in
//! the missing mask and hold `NaN` until imputation.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::catalog::{FeatureCatalog, FeatureNo};
use super::table::{ClassLabel, FeatureTable};
use crate::error::{Error, Result};

pub const DEFAULT_LABEL_COLUMN: &str = "label";

pub fn is_missing_token(cell: &str) -> bool {
    let s = cell.trim();
    s.is_empty()
        || s.eq_ignore_ascii_case("na")
        || s.eq_ignore_ascii_case("nan")
        || s.eq_ignore_ascii_case("null")
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<FeatureTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut label_pos = None;
    // (csv position, feature)
    let mut columns: Vec<(usize, FeatureNo)> = Vec::new();
    for (pos, name) in headers.iter().enumerate() {
        if name.eq_ignore_ascii_case(label_column) {
            if label_pos.replace(pos).is_some() {
                return Err(Error::DuplicateColumn(name.to_string()));
            }
            continue;
        }
        let feature = FeatureCatalog.resolve(name)?;
        if columns.iter().any(|&(_, f)| f == feature) {
            return Err(Error::DuplicateColumn(name.to_string()));
        }
        columns.push((pos, feature));
    }
    let label_pos = label_pos.ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    columns.sort_by_key(|&(_, f)| f);
    let features: Vec<FeatureNo> = columns.iter().map(|&(_, f)| f).collect();

    let mut values = Vec::new();
    let mut missing = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let raw_label = record.get(label_pos).unwrap_or("");
        let label = ClassLabel::parse(raw_label).ok_or_else(|| Error::InvalidLabel {
            row: row + 1,
            value: raw_label.to_string(),
        })?;
        labels.push(label);
        for &(pos, feature) in &columns {
            let cell = record.get(pos).unwrap_or("");
            if is_missing_token(cell) {
                values.push(f64::NAN);
                missing.push(true);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::InvalidCell {
                row: row + 1,
                column: feature.name().to_string(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidCell {
                    row: row + 1,
                    column: feature.name().to_string(),
                    value: cell.to_string(),
                });
            }
            values.push(v);
            missing.push(false);
        }
    }
    FeatureTable::new(features, values, labels, missing)
}

/// Writes `table` with the input schema. Finite values use the shortest
/// representation that parses back to the same `f64`; cells that are still
/// missing are written empty.
pub fn write_csv<W: Write>(table: &FeatureTable, writer: W, label_column: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = table.features().iter().map(|f| f.name()).collect();
    header.push(label_column);
    wtr.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..table.n_rows() {
        record.clear();
        for &v in table.row(i) {
            record.push(if v.is_finite() { format!("{v}") } else { String::new() });
        }
        record.push(table.labels()[i].code().to_string());
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn save_csv(table: &FeatureTable, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file), label_column)
}
