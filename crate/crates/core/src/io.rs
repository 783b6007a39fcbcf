//! Dataset CSV and experiment report formats.
//!
//! Dataset CSV, rows-are-curves layout:
//!
//! ```text
//! t,0,0.5,1
//! curve_a,0.1,0.3,-0.2
//! curve_b,0.0,0.4,0.9
//! ```
//!
//! The columns-are-curves layout is the transpose: the header row holds
//! `t` followed by curve labels and each following row starts with a grid
//! point. Grids are sorted ascending on load with the values permuted to
//! match. Floats are written in Rust's shortest round-trip form, so
//! `read(write(d)) == d` exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FunctionalDataset, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetLayout {
    #[default]
    RowsAreCurves,
    ColsAreCurves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(cell: &str, line: u64) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("non-numeric cell {cell:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite value {cell:?}")));
    }
    Ok(v)
}

/// Reads every record as `(line, fields)`; rejects ragged records.
fn read_records<R: Read>(reader: R) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => parse_error(line, format!("{other:?}")),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if let Some((_, first)) = out.first() {
            if rec.len() != first.len() {
                return Err(parse_error(
                    line,
                    format!("expected {} fields, found {}", first.len(), rec.len()),
                ));
            }
        }
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

/// Parses a dataset from CSV text.
pub fn read_dataset<R: Read>(reader: R, layout: DatasetLayout) -> Result<FunctionalDataset> {
    let records = read_records(reader)?;
    let ((header_line, header), body) = match records.split_first() {
        Some(split) => split,
        None => return Err(parse_error(1, "missing header row")),
    };
    if header.len() < 2 {
        return Err(parse_error(
            *header_line,
            "header needs a label column and at least one more field",
        ));
    }
    let (points, labels, rows): (Vec<f64>, Vec<String>, Vec<Vec<f64>>) = match layout {
        DatasetLayout::RowsAreCurves => {
            let points = header[1..]
                .iter()
                .map(|c| parse_number(c, *header_line))
                .collect::<Result<_>>()?;
            let mut labels = Vec::with_capacity(body.len());
            let mut rows = Vec::with_capacity(body.len());
            for (line, rec) in body {
                labels.push(rec[0].clone());
                rows.push(
                    rec[1..]
                        .iter()
                        .map(|c| parse_number(c, *line))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            (points, labels, rows)
        }
        DatasetLayout::ColsAreCurves => {
            let labels: Vec<String> = header[1..].to_vec();
            let mut points = Vec::with_capacity(body.len());
            let mut rows = vec![Vec::with_capacity(body.len()); labels.len()];
            for (line, rec) in body {
                points.push(parse_number(&rec[0], *line)?);
                for (row, cell) in rows.iter_mut().zip(&rec[1..]) {
                    row.push(parse_number(cell, *line)?);
                }
            }
            if points.is_empty() {
                return Err(parse_error(*header_line + 1, "no grid rows"));
            }
            (points, labels, rows)
        }
    };
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].total_cmp(&points[b]));
    let grid = Arc::new(Grid::new(points)?);
    let rows = rows
        .into_iter()
        .map(|r| order.iter().map(|&k| r[k]).collect())
        .collect();
    FunctionalDataset::new(grid, rows)?.with_labels(labels)
}

pub fn load_dataset_csv(
    path: impl AsRef<Path>,
    layout: DatasetLayout,
) -> Result<FunctionalDataset> {
    read_dataset(BufReader::new(File::open(path)?), layout)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_dataset<W: Write>(
    writer: W,
    data: &FunctionalDataset,
    layout: DatasetLayout,
) -> Result<()> {
    let mut wtr = csv_writer(writer);
    let points = data.grid().points();
    match layout {
        DatasetLayout::RowsAreCurves => {
            let header = std::iter::once("t".to_owned()).chain(points.iter().map(|&t| fmt_f64(t)));
            wtr.write_record(header).map_err(csv_err)?;
            for (label, row) in data.labels().iter().zip(data.rows()) {
                let rec = std::iter::once(label.clone()).chain(row.iter().map(|&v| fmt_f64(v)));
                wtr.write_record(rec).map_err(csv_err)?;
            }
        }
        DatasetLayout::ColsAreCurves => {
            let header = std::iter::once("t".to_owned()).chain(data.labels().iter().cloned());
            wtr.write_record(header).map_err(csv_err)?;
            for (k, &t) in points.iter().enumerate() {
                let rec = std::iter::once(fmt_f64(t)).chain(data.rows().map(|r| fmt_f64(r[k])));
                wtr.write_record(rec).map_err(csv_err)?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_dataset_csv(
    path: impl AsRef<Path>,
    data: &FunctionalDataset,
    layout: DatasetLayout,
) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data, layout)
}

/// One report cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Bool(b) => b.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => fmt_f64(*f),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Float(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Cell::Bool(b) => Some(b),
            _ => None,
        }
    }

    fn is_finite(&self) -> bool {
        !matches!(self, Cell::Float(f) if !f.is_finite())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub experiment: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// Largest diagonal jitter used by any covariance factorization.
    pub jitter_used: f64,
    /// Only set when timing was requested; omitted otherwise so reports stay
    /// byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ExperimentReport {
    pub fn new(metadata: ReportMetadata, columns: &[&str]) -> Self {
        Self {
            metadata,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::ShapeMismatch {
                expected: self.columns.len(),
                actual: row.len(),
            });
        }
        if let Some(pos) = row.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite metric in column {}",
                self.columns[pos]
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of column `name`, in row order.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }

    pub fn column_bool(&self, name: &str) -> Option<Vec<bool>> {
        let k = self.column_index(name)?;
        self.rows.iter().map(|r| r[k].as_bool()).collect()
    }
}

/// Serializes a report. CSV carries only the table; JSON carries metadata,
/// columns and rows.
pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Csv => {
            let mut wtr = csv_writer(Vec::new());
            wtr.write_record(&report.columns).map_err(csv_err)?;
            for row in &report.rows {
                wtr.write_record(row.iter().map(Cell::render))
                    .map_err(csv_err)?;
            }
            wtr.into_inner()
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn write_report(
    report: &ExperimentReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let bytes = render_report(report, format)?;
    let mut f = File::create(path)?;
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn parse_report_json(bytes: &[u8]) -> Result<ExperimentReport> {
    serde_json::from_slice(bytes).map_err(|e| parse_error(e.line() as u64, e.to_string()))
}
