//! Column tables written as CSV with 12 significant digits and LF line endings.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// Missing values (e.g. Monte Carlo columns of an analytic run) are `None`.
    pub rows: Vec<Vec<Option<f64>>>,
}

fn format_value(v: Option<f64>) -> String {
    // adding 0.0 turns -0.0 into 0.0
    v.map(|x| format!("{:.11e}", x + 0.0)).unwrap_or_default()
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// # Panics
    /// If the row length differs from the column count.
    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row length of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// # Panics
    /// If the column does not exist.
    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        let i = self
            .column_index(name)
            .unwrap_or_else(|| panic!("table {} has no column {name}", self.name));
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn drop_column(&mut self, name: &str) {
        if let Some(i) = self.column_index(name) {
            self.columns.remove(i);
            for r in &mut self.rows {
                r.remove(i);
            }
        }
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format_value(*v))).expect("writing to memory");
        }
        w.into_inner().expect("writing to memory")
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, self.to_csv_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_twelve_digits_and_lf() {
        let mut t = Table::new("t", &["xT_m", "corr_mc"]);
        t.push(vec![Some(-0.0), None]);
        t.push(vec![Some(1.0 / 3.0), Some(-2.5e-4)]);
        let text = String::from_utf8(t.to_csv_bytes()).unwrap();
        assert_eq!(text, "xT_m,corr_mc\n0.00000000000e0,\n3.33333333333e-1,-2.50000000000e-4\n");
    }

    #[test]
    fn drop_column_removes_values() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![Some(1.0), Some(2.0)]);
        t.drop_column("a");
        assert_eq!(t.columns, vec!["b"]);
        assert_eq!(t.column("b"), vec![Some(2.0)]);
    }
}
