//! Columnar payloads and the JSON result envelope.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig, Task};
use crate::error::{CliError, CliResult};

pub const ARTIFACT: &str = "antichiral";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn records(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> =
                    self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.clone())).collect();
                Value::Object(m)
            })
            .collect()
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::io(self.name, std::io::Error::other(e));
        w.write_record(&self.columns).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(cell)).map_err(err)?;
        }
        w.into_inner().map_err(|e| CliError::io(self.name, std::io::Error::other(e.to_string())))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Result of one task: tables plus scalar summary fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Payload {
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
}

impl Payload {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub task: &'static str,
    pub config: &'a RunConfig,
    pub wall_clock_seconds: f64,
    pub summary: &'a Map<String, Value>,
    /// Table name → CSV file, in CSV mode.
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub files: Map<String, Value>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub tables: Map<String, Value>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Writes the payload. CSV mode: the first table goes to `path` (or stdout),
/// further tables to `<stem>.<table>.csv` beside it, and the envelope to
/// `<stem>.envelope.json`. JSON mode: one envelope with every table inline.
pub fn emit(
    task: Task,
    config: &RunConfig,
    payload: &Payload,
    wall_clock_seconds: f64,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let mut env = Envelope {
        artifact: ARTIFACT,
        version: env!("CARGO_PKG_VERSION"),
        task: task.name(),
        config,
        wall_clock_seconds,
        summary: &payload.summary,
        files: Map::new(),
        tables: Map::new(),
    };
    let out_err = |e: std::io::Error| CliError::io("stdout", e);
    match (config.output.format, &config.output.path) {
        (Format::Json, path) => {
            env.tables = payload.tables.iter().map(|t| (t.name.to_string(), Value::Array(t.records()))).collect();
            let mut text = serde_json::to_string_pretty(&env).expect("envelope serializes");
            text.push('\n');
            match path {
                Some(p) => write_file(p, text.as_bytes())?,
                None => stdout.write_all(text.as_bytes()).map_err(out_err)?,
            }
        }
        (Format::Csv, Some(p)) => {
            for (i, t) in payload.tables.iter().enumerate() {
                let target = if i == 0 { p.clone() } else { sibling(p, &format!(".{}.csv", t.name)) };
                write_file(&target, &t.to_csv()?)?;
                env.files.insert(t.name.to_string(), Value::String(target.display().to_string()));
            }
            let mut text = serde_json::to_string_pretty(&env).expect("envelope serializes");
            text.push('\n');
            write_file(&sibling(p, ".envelope.json"), text.as_bytes())?;
        }
        (Format::Csv, None) => {
            for (i, t) in payload.tables.iter().enumerate() {
                if i > 0 {
                    stdout.write_all(b"\n").map_err(out_err)?;
                }
                if payload.tables.len() > 1 {
                    writeln!(stdout, "# {}", t.name).map_err(out_err)?;
                }
                stdout.write_all(&t.to_csv()?).map_err(out_err)?;
            }
        }
    }
    Ok(())
}
