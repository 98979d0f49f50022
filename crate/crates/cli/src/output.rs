//! Plot-ready persistence: CSV with a header row and 17 significant digits,
//! pretty JSON stamped with the schema version. Data files carry no
//! timestamps, so identical runs produce identical bytes.

use crate::CliError;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Lossless float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Cell of a CSV row.
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
        }
    }
}

/// Collects the files written during one command.
pub struct Sink {
    dir: PathBuf,
    pub written: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Sink { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn sub(&self, name: &str) -> Result<Sink, CliError> {
        Sink::new(&self.dir.join(name))
    }

    fn put(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<(), CliError> {
        let mut body = header.join(",");
        body.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(body, "{}", line.join(","));
        }
        self.put(name, &body)
    }

    /// Numeric-only CSV.
    pub fn csv_f64(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
        self.csv(name, header, rows.into_iter().map(|r| r.into_iter().map(Cell::F).collect()))
    }

    /// JSON document carrying a `schema_version` field (keys sorted).
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let body = to_versioned_json(value)?;
        self.put(name, &body)
    }
}

pub fn to_versioned_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Io(format!("serialization: {e}")))?;
    let mut doc = serde_json::Map::new();
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    match v {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("data".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).map_err(|e| CliError::Io(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_and_json_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = Sink::new(dir.path()).unwrap();
        sink.csv("a.csv", &["name", "x"], vec![vec![Cell::S("p, q".into()), Cell::F(1.0)]]).unwrap();
        sink.json("b.json", &json!({"z": 1})).unwrap();
        let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(a, "name,x\n\"p, q\",1.0000000000000000e0\n");
        let b: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
        assert_eq!(b["schema_version"], 1);
        assert_eq!(sink.written.len(), 2);
    }
}
