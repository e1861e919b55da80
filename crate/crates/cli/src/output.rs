//! CSV and JSON writers. Floats use the shortest representation that round-trips.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Writer<'a> {
    cfg: &'a RunConfig,
    convention: Value,
}

/// Writes to the file, or stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

impl<'a> Writer<'a> {
    pub fn new(cfg: &'a RunConfig, convention: Value) -> Self {
        Self { cfg, convention }
    }

    fn config(&self) -> Value {
        serde_json::to_value(self.cfg).expect("config serializes")
    }

    pub fn table(&self, table: &Table, format: Format) -> std::io::Result<()> {
        let text = match format {
            Format::Csv => {
                let mut s = String::new();
                s.push_str(&format!("# config: {}\n", self.config()));
                s.push_str(&format!("# convention: {}\n", self.convention));
                s.push_str(&table.columns.join(","));
                s.push('\n');
                for row in &table.rows {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let doc = json!({
                    "config": self.config(),
                    "convention": self.convention,
                    "columns": table.columns,
                    "rows": table.rows,
                });
                pretty(&doc)
            }
        };
        emit(self.cfg.output.path.as_deref(), &text)
    }

    /// Reports are JSON regardless of the requested format.
    pub fn json(&self, doc: &Value) -> std::io::Result<()> {
        emit(self.cfg.output.path.as_deref(), &pretty(doc))
    }
}

fn pretty(doc: &Value) -> String {
    serde_json::to_string_pretty(doc).expect("serializable") + "\n"
}
