//! Comma-separated numeric tables.
//!
//! Input: `.` decimal separator, LF or CRLF line endings, and an optional
//! header row, detected by a non-numeric first field. Output always uses LF
//! and 17 significant digits so that a write/read cycle is lossless.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_rows, Normalization};
use crate::dataset::{Dataset, Origin};
use crate::error::{CsvErrorKind, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelColumn {
    #[default]
    None,
    Last,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CsvOptions {
    /// Feature columns (0-based). `None` means every non-label column.
    #[serde(default)]
    pub features: Option<Vec<usize>>,
    #[serde(default)]
    pub label: LabelColumn,
    #[serde(default)]
    pub normalize: Normalization,
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| Error::Csv {
        row,
        column,
        kind: CsvErrorKind::NonNumeric(cell.to_string()),
    })
}

/// Parse CSV text. Rows and columns in errors are 1-based.
pub fn parse_csv<F: Scalar>(text: &str, options: &CsvOptions, origin: Origin) -> Result<Dataset<F>> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut width: Option<usize> = None;
    let mut table: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            column: 0,
            kind: CsvErrorKind::Malformed(e.to_string()),
        })?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if i == 0 && record.get(0).is_some_and(|c| c.trim().parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::Csv {
                    row,
                    column: record.len().min(w) + 1,
                    kind: CsvErrorKind::Ragged {
                        expected: w,
                        found: record.len(),
                    },
                })
            }
            _ => width = Some(record.len()),
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(j, cell)| parse_cell(cell, row, j + 1))
            .collect::<Result<Vec<_>>>()?;
        table.push(values);
    }
    let width = match (table.is_empty(), width) {
        (false, Some(w)) => w,
        _ => return Err(Error::EmptyCsv),
    };

    let label = match options.label {
        LabelColumn::None => None,
        LabelColumn::Last => Some(width - 1),
        LabelColumn::Index(j) => Some(j),
    };
    let features: Vec<usize> = match &options.features {
        Some(cols) => cols.clone(),
        None => (0..width).filter(|&j| Some(j) != label).collect(),
    };
    for &j in features.iter().chain(label.iter()) {
        if j >= width {
            return Err(Error::Csv {
                row: 1,
                column: j + 1,
                kind: CsvErrorKind::ColumnOutOfRange(j),
            });
        }
    }

    let mut xs: Vec<Vec<F>> = table
        .iter()
        .map(|r| features.iter().map(|&j| F::of(r[j])).collect())
        .collect();
    normalize_rows(&mut xs, options.normalize);
    let rows = xs
        .into_iter()
        .zip(&table)
        .map(|(x, r)| (x, label.map(|j| F::of(r[j]))))
        .collect();
    Dataset::from_rows(rows, origin)
}

pub fn load_csv<F: Scalar>(path: impl AsRef<Path>, options: &CsvOptions, origin: Origin) -> Result<Dataset<F>> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, options, origin)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float<F: Scalar>(v: F) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

/// Write features (and the response, last, when every sample has one) with
/// a `x0,…,x{d−1}[,y]` header.
pub fn write_csv<F: Scalar, W: Write>(data: &Dataset<F>, mut out: W) -> Result<()> {
    let with_y = data.has_responses();
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    if with_y {
        header.push("y".into());
    }
    writeln!(out, "{}", header.join(","))?;
    for s in data.samples() {
        let mut cells: Vec<String> = s.features().iter().map(|&v| format_float(v)).collect();
        if let (true, Some(y)) = (with_y, s.response()) {
            cells.push(format_float(y));
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
