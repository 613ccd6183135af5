//! CSV output. Experiment files start with the full config echoed as `#`
//! comment rows, followed by one row per update.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{to_db, ExperimentConfig, ExperimentResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub update_index: usize,
    pub nmsd_db_mean: f64,
    pub nmsd_db_p10: f64,
    pub nmsd_db_p90: f64,
    pub diverged_count: usize,
}

impl ExperimentResult {
    pub fn rows(&self) -> Vec<TraceRow> {
        let Some(agg) = &self.aggregate else {
            return Vec::new();
        };
        let diverged = self.diverged_by(agg.len());
        (0..agg.len())
            .map(|k| TraceRow {
                update_index: k,
                nmsd_db_mean: to_db(agg.mean[k]),
                nmsd_db_p10: agg.p10_db[k],
                nmsd_db_p90: agg.p90_db[k],
                diverged_count: diverged[k],
            })
            .collect()
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn open_with_comments(path: &Path, comments: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for line in comments.lines() {
        writeln!(out, "# {line}").map_err(io_err(path))?;
    }
    Ok(csv::Writer::from_writer(out))
}

/// Writes the config echo and trace rows. An empty row set leaves only the
/// header.
pub fn write_trace_csv(path: &Path, cfg: &ExperimentConfig, rows: &[TraceRow]) -> Result<()> {
    let mut w = open_with_comments(path, &cfg.to_toml_string())?;
    if rows.is_empty() {
        w.write_record([
            "update_index",
            "nmsd_db_mean",
            "nmsd_db_p10",
            "nmsd_db_p90",
            "diverged_count",
        ])
        .map_err(csv_err(path))?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    read_records(path)
}

/// Writes arbitrary records under an optional comment block.
pub fn write_records<T: Serialize>(
    path: &Path,
    comments: &str,
    rows: &[T],
    header: &[&str],
) -> Result<()> {
    let mut w = open_with_comments(path, comments)?;
    if rows.is_empty() {
        w.write_record(header).map_err(csv_err(path))?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityRow {
    pub quantity: String,
    pub value: String,
}

impl QuantityRow {
    pub fn new(quantity: impl Into<String>, value: impl ToString) -> Self {
        Self {
            quantity: quantity.into(),
            value: value.to_string(),
        }
    }
}

/// `(quantity, value)` rows as used by the theory summaries.
pub fn write_quantities(path: &Path, comments: &str, rows: &[QuantityRow]) -> Result<()> {
    write_records(path, comments, rows, &["quantity", "value"])
}

pub fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))
}
