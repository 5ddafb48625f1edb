//! CSV output with a `#`-prefixed metadata block.

use std::io::Write;
use std::path::Path;

use super::config::Experiment;
use crate::error::{Result, SimError};

/// Significant digits written for floating-point cells.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_sig(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] and prints the shortest form of the result.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k} = {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| SimError::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Header, metadata and rows of a CSV written by [`Report::write_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Result<Self> {
        let metadata = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| SimError::Format(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(SimError::Format("CSV has no header row".into()));
        }
        let rows = reader
            .records()
            .map(|r| {
                r.map(|rec| rec.iter().map(String::from).collect())
                    .map_err(|e| SimError::Format(e.to_string()))
            })
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(CsvTable { metadata, columns, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column `j` as numbers.
    pub fn numeric_column(&self, j: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row.get(j).ok_or_else(|| SimError::Format(format!("row {} is short", i + 1)))?;
                cell.parse::<f64>()
                    .map_err(|_| SimError::Format(format!("row {}, column `{}`: `{cell}` is not a number", i + 1, self.columns[j])))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.629943123456789), "0.629943123457");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(-2.5e-9), "-2.5e-9");
        assert_eq!(format_sig(1.0 / 3.0).len(), "0.333333333333".len());
    }

    #[test]
    fn round_trip() {
        let r = Report {
            experiment: Experiment::Trace,
            metadata: vec![("experiment".into(), "trace".into())],
            columns: vec!["t_over_tau".into(), "F_bare".into()],
            rows: vec![vec![Cell::Num(0.0), Cell::Num(1.0)], vec![Cell::Num(0.5), Cell::Num(0.75)]],
        };
        let text = r.to_csv_string().unwrap();
        assert!(text.starts_with("# experiment = trace\nt_over_tau,F_bare\n"));
        let t = CsvTable::parse(&text).unwrap();
        assert_eq!(t.metadata, r.metadata);
        assert_eq!(t.numeric_column(1).unwrap(), vec![1.0, 0.75]);
    }

    #[test]
    fn empty_csv_is_a_format_error() {
        assert!(matches!(CsvTable::parse(""), Err(SimError::Format(_))));
        assert!(matches!(CsvTable::parse("# only = metadata\n"), Err(SimError::Format(_))));
    }
}
