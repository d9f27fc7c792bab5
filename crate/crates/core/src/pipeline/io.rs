//! Files written by the pipeline: JSON documents, fixed-header CSV tables, curve files.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{NahmError, Result};
use crate::flow::NahmCurve;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A CSV cell: floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::F(x) => fmt_f64(*x),
            Self::I(k) => k.to_string(),
            Self::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::F(x)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Self::I(k as i64)
    }
}

impl From<i64> for Cell {
    fn from(k: i64) -> Self {
        Self::I(k)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::S(s)
    }
}

/// A table with a fixed header; rows of the wrong width are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(NahmError::Dimension(format!("row has {} cells, header has {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| NahmError::Io(std::io::Error::other(e));
        w.write_record(self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| NahmError::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// Read a CSV file written by [`Table::write`], checking the header.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| NahmError::Io(std::io::Error::other(e)))?;
    let got: Vec<String> = r
        .headers()
        .map_err(|e| NahmError::Io(std::io::Error::other(e)))?
        .iter()
        .map(str::to_string)
        .collect();
    if got != header {
        return Err(NahmError::Config(format!("{}: header {:?}, expected {:?}", path.display(), got, header)));
    }
    r.records()
        .map(|rec| {
            rec.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| NahmError::Io(std::io::Error::other(e)))
        })
        .collect()
}

/// A solved curve together with the hash of the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub manifest: String,
    pub curve: NahmCurve,
}
