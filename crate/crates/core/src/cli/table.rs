use std::path::Path;

use csv::{Terminator, WriterBuilder};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    /// Serialized as `none`.
    Missing,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => "none".to_owned(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

/// 17 significant digits in scientific notation; parses back to the same bits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Precondition(format!(
                "row has {} cells, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = WriterBuilder::new()
            .terminator(Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [std::f64::consts::PI, 0.1, -1.0 / 3.0, 1e-300, 6.123233995736766e-17, 0.0] {
            let s = format_real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_real(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn lf_endings_and_none_cells() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec![Cell::from(1.0), Cell::Missing]).unwrap();
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000000e0,none\n");
    }

    #[test]
    fn arity_is_enforced() {
        let mut t = CsvTable::new(&["a", "b"]);
        assert!(t.push(vec![Cell::from(1.0)]).is_err());
    }
}
