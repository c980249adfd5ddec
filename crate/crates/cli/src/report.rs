//! Plot-ready tables, number formatting and deterministic file output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{OutputFormat, RunConfig};

/// Significant digits of every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 10;

/// Decimal rendering with [`SIGNIFICANT_DIGITS`] significant digits,
/// trailing zeros dropped; scientific notation outside `1e-5 ..= 1e15`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    // Re-render from the rounded mantissa so that fixed notation carries
    // exactly the same digits.
    let rounded: f64 = sci.parse().expect("round trip");
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    let fixed = trim_zeros(&format!("{rounded:.decimals$}")).to_string();
    if fixed == "-0" {
        "0".into()
    } else {
        fixed
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    fn write_csv(&self, out: &mut String) {
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub config: RunConfig,
    pub summary: Vec<(String, Cell)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Self {
            config,
            summary: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Comment block opening every emitted file.
    pub fn header(&self) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# tflab {} {}", env!("CARGO_PKG_VERSION"), self.config.command.name());
        let _ = writeln!(h, "# config-sha256: {}", self.config.hash());
        let _ = writeln!(h, "# config: {}", self.config.canonical_json());
        if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
            let _ = writeln!(h, "# source-date-epoch: {}", epoch.trim());
        }
        h
    }

    fn summary_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k},{}", v.render());
        }
        s
    }

    /// File name and contents for every artifact of this report.
    pub fn render(&self) -> Vec<(String, String)> {
        let header = self.header();
        let stem = self.config.command.name().replace('-', "_");
        match self.config.format {
            OutputFormat::Csv => {
                let mut files = vec![(format!("{stem}_summary.csv"), format!("{header}{}", self.summary_csv()))];
                for t in &self.tables {
                    let mut body = header.clone();
                    t.write_csv(&mut body);
                    files.push((format!("{}.csv", t.name), body));
                }
                files
            }
            OutputFormat::Report => {
                let mut body = header;
                body.push_str("\n[summary]\n");
                for (k, v) in &self.summary {
                    let _ = writeln!(body, "{k} = {}", v.render());
                }
                for t in &self.tables {
                    let _ = write!(body, "\n[table {}]\n", t.name);
                    t.write_csv(&mut body);
                }
                vec![(format!("{stem}_report.txt"), body)]
            }
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        self.render()
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                Ok(path)
            })
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_number(117.44719377123), "117.4471938");
        assert_eq!(format_number(110.0), "110");
        assert_eq!(format_number(-0.5), "-0.5");
        assert_eq!(format_number(1_000_000.0), "1000000");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(1.23456789012e-7), "1.23456789e-7");
        assert_eq!(format_number(9.99999999996), "10");
        assert_eq!(format_number(-1e-20), "-1e-20");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
    }

    #[test]
    fn rendered_numbers_round_trip_to_ten_digits() {
        for x in [std::f64::consts::PI, 1e14 / 3.0, 2.0 / 3.0e-4, -123.456e-3] {
            let back: f64 = format_number(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-9, "{x} -> {back}");
        }
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
