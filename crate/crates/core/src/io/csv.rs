//! Plain CSV tables: a header row, then one row per record. Reals are
//! written in scientific notation with 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::coarticulation::{CoarticulationWeights, LossReport};
use crate::error::{Error, Result};
use crate::metrics::MetricReport;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            Cell::Real(v) => out.push_str(&format_real(*v)),
            Cell::Text(s) => out.push_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 9 significant digits, `d.dddddddde±x`.
pub fn format_real(v: f64) -> String {
    format!("{v:.8e}")
}

/// Anything that can be written as a CSV table.
pub trait CsvTable {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<Cell>>;

    fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in self.rows() {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

pub fn write_csv_report(report: &impl CsvTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))
}

/// Splits CSV text into its header and rows of raw fields.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    let header = lines.next().map(split).unwrap_or_default();
    let rows = lines.map(split).collect();
    (header, rows)
}

impl CsvTable for MetricReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["fve", "lve", "ldtw", "lip_max"]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        vec![vec![
            self.fve.into(),
            self.lve.into(),
            self.ldtw.into(),
            self.lip_max.into(),
        ]]
    }
}

/// Per-frame terms followed by a `total` row.
impl CsvTable for LossReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["frame", "loss"]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let mut rows: Vec<Vec<Cell>> = self
            .per_frame
            .iter()
            .enumerate()
            .map(|(j, v)| vec![(self.first_frame + j).into(), (*v).into()])
            .collect();
        rows.push(vec!["total".into(), self.total.into()]);
        rows
    }
}

impl CsvTable for CoarticulationWeights {
    fn header(&self) -> Vec<&'static str> {
        vec!["t", "raw_energy", "weight"]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        self.raw_energy()
            .iter()
            .zip(self.weights())
            .enumerate()
            .map(|(t, (e, w))| vec![t.into(), (*e).into(), (*w).into()])
            .collect()
    }
}
