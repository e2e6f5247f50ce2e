//! CSV input and output. Comma separated, one header row, `NA` for cells
//! with no value.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use spice::{BoolMask, DataMatrix, SymmetricMatrix};

use crate::UsageError;

/// A numeric table with its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Reads a numeric CSV. Errors name the offending line and column.
pub fn read_table(path: &Path) -> anyhow::Result<Table> {
    let file = File::open(path).map_err(|e| UsageError(format!("cannot open {}: {e}", path.display())))?;
    parse_table(file, &path.display().to_string())
}

pub fn parse_table(input: impl std::io::Read, name: &str) -> anyhow::Result<Table> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| UsageError(format!("{name}: cannot read header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            UsageError(format!("{name}: line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .iter()
            .zip(&header)
            .map(|(cell, col)| {
                let cell = cell.trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| UsageError(format!("{name}: line {line}, column `{col}`: not a number: `{cell}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize, UsageError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| UsageError(format!("no column named `{name}`")))
    }

    /// The table as a data matrix, without the listed columns.
    pub fn data(&self, drop: Option<usize>) -> Result<(Vec<String>, DataMatrix), UsageError> {
        let keep: Vec<usize> = (0..self.header.len()).filter(|&j| Some(j) != drop).collect();
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
        let x = DataMatrix::from_rows(&rows).map_err(|e| UsageError(format!("input data: {e}")))?;
        Ok((keep.iter().map(|&j| self.header[j].clone()).collect(), x))
    }

    /// Column `j` as 0/1 class labels.
    pub fn labels(&self, j: usize) -> Result<Vec<u8>, UsageError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| match r[j] {
                v if v == 0.0 => Ok(0),
                v if v == 1.0 => Ok(1),
                v => Err(UsageError(format!("row {}: label must be 0 or 1, got {v}", i + 1))),
            })
            .collect()
    }
}

/// Full precision for matrices that may be read back.
pub fn fmt_exact(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix(path: &Path, names: &[String], m: &SymmetricMatrix) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = (0..m.dim()).map(|i| m.row(i).iter().map(|&v| fmt_exact(v)).collect()).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_rows(path, &header, &rows)
}

pub fn write_mask(path: &Path, names: &[String], mask: &BoolMask) -> anyhow::Result<()> {
    let p = mask.dim();
    let rows: Vec<Vec<String>> = (0..p)
        .map(|i| (0..p).map(|j| u8::from(mask.get(i, j)).to_string()).collect())
        .collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_rows(path, &header, &rows)
}

pub fn write_counts(path: &Path, counts: &[Vec<usize>]) -> anyhow::Result<()> {
    let names: Vec<String> = (1..=counts.len()).map(|j| format!("v{j}")).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = counts.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect();
    write_rows(path, &header, &rows)
}

/// Reads back a matrix written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> anyhow::Result<SymmetricMatrix> {
    let t = read_table(path)?;
    Ok(SymmetricMatrix::from_rows(&t.rows)?)
}
