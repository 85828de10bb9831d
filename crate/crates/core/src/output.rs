//! Deterministic CSV and JSON emission.
//!
//! Every artifact starts with the same metadata: package version, configuration hash and a
//! provenance string naming the quantities tabulated. Floats are printed in shortest
//! round-trip form, so identical inputs give byte-identical files.

use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config("--format", format!("expected csv or json, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub generator: String,
    pub version: String,
    pub config_sha256: String,
    pub command: String,
    pub provenance: String,
}

impl Metadata {
    pub fn new(config_sha256: impl Into<String>, command: impl Into<String>, provenance: impl Into<String>) -> Self {
        Self {
            generator: "disc-holonomy".into(),
            version: VERSION.into(),
            config_sha256: config_sha256.into(),
            command: command.into(),
            provenance: provenance.into(),
        }
    }

    fn as_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".into(),
            Cell::Float(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

/// A rectangular table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("generator", &meta.generator),
            ("version", &meta.version),
            ("config_sha256", &meta.config_sha256),
            ("command", &meta.command),
            ("table", &self.name),
            ("provenance", &meta.provenance),
        ] {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        let _ = writer.write_record(&self.columns);
        for row in &self.rows {
            let _ = writer.write_record(row.iter().map(Cell::csv));
        }
        let body = writer.into_inner().map(|b| String::from_utf8_lossy(&b).into_owned()).unwrap_or_default();
        out.push_str(&body);
        out
    }

    pub fn to_json(&self, meta: &Metadata) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| Value::Array(row.iter().map(Cell::json).collect()))
            .collect();
        json!({
            "metadata": meta.as_json(),
            "table": self.name,
            "columns": self.columns,
            "rows": rows,
        })
    }
}

/// Pretty JSON with a metadata block; key order follows the serialized structs.
pub fn summary_json(meta: &Metadata, body: &impl Serialize) -> Result<String> {
    let value = json!({
        "metadata": meta.as_json(),
        // Non-finite floats become null.
        "result": serde_json::to_value(body).map_err(|e| Error::Consistency(e.to_string()))?,
    });
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Consistency(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes artifacts into one directory, one file per table.
#[derive(Debug, Clone)]
pub struct Emitter {
    pub dir: PathBuf,
    pub format: Format,
    pub meta: Metadata,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, format: Format, meta: Metadata) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            meta,
            written: Vec::new(),
        })
    }

    pub fn table(&mut self, table: &Table) -> Result<PathBuf> {
        let (path, text) = match self.format {
            Format::Csv => (self.dir.join(format!("{}.csv", table.name)), table.to_csv(&self.meta)),
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&table.to_json(&self.meta))
                    .map_err(|e| Error::Consistency(e.to_string()))?;
                text.push('\n');
                (self.dir.join(format!("{}.json", table.name)), text)
            }
        };
        fs::write(&path, text)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn summary(&mut self, name: &str, body: &impl Serialize) -> Result<PathBuf> {
        let path = self.dir.join(format!("{name}.json"));
        fs::write(&path, summary_json(&self.meta, body)?)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Metadata {
        Metadata::new("abc", "modes", "closed form")
    }

    #[test]
    fn csv_has_header_and_round_trip_floats() {
        let mut t = Table::new("demo", &["m", "value"]);
        t.push(vec![2.into(), 0.1.into()]);
        t.push(vec![3.into(), f64::NAN.into()]);
        let text = t.to_csv(&meta());
        assert!(text.starts_with("# generator: disc-holonomy\n"));
        assert!(text.contains("# config_sha256: abc\n"));
        assert!(text.contains("m,value\n2,1e-1\n3,nan\n"));
        let parsed: f64 = "1e-1".parse().unwrap();
        assert_eq!(parsed, 0.1);
    }

    #[test]
    fn json_masks_non_finite() {
        let mut t = Table::new("demo", &["x"]);
        t.push(vec![f64::INFINITY.into()]);
        let v = t.to_json(&meta());
        assert_eq!(v["rows"][0][0], Value::Null);
        assert_eq!(v["metadata"]["command"], "modes");
    }
}
