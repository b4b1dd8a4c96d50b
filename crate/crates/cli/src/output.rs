//! Report tables and their CSV/JSON serialization.
//!
//! CSV files start with a `# txfee version=… seed=…` comment line, then a
//! fixed header. JSON documents carry the same rows as objects plus an echo
//! of the configuration that produced them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub name: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(name: impl Into<String>, seed: Option<u64>, config: Value, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            seed,
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    /// Value of `column` in row `i`.
    pub fn get(&self, i: usize, column: &str) -> Option<&Value> {
        let j = self.columns.iter().position(|c| c == column)?;
        self.rows.get(i).map(|r| &r[j])
    }

    pub fn column(&self, column: &str) -> Vec<&Value> {
        (0..self.rows.len()).filter_map(|i| self.get(i, column)).collect()
    }

    fn preamble(&self) -> String {
        match self.seed {
            Some(s) => format!("# txfee version={VERSION} seed={s}"),
            None => format!("# txfee version={VERSION} seed=none"),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell))?;
        }
        let body = String::from_utf8(w.into_inner().context("flushing csv")?)?;
        Ok(format!("{}\n{body}", self.preamble()))
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().cloned()).collect();
                Value::Object(obj)
            })
            .collect();
        serde_json::json!({
            "report": self.name,
            "version": VERSION,
            "seed": self.seed,
            "config": self.config,
            "rows": rows,
        })
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(serde_json::to_string_pretty(&self.to_json())? + "\n"),
        }
    }

    /// Writes `<dir>/<name>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        fs::write(&path, self.render(format)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

/// JSON number for a float; non-finite values become null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_preamble_and_header() {
        let mut r = Report::new("t", Some(7), Value::Null, &["a", "b"]);
        r.push(vec![num(0.5), Value::from("x")]);
        r.push(vec![num(f64::NAN), Value::from(true)]);
        let csv = r.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("# txfee version={VERSION} seed=7"));
        assert_eq!(&lines[1..], &["a,b", "0.5,x", ",true"]);
        let j = r.to_json();
        assert_eq!(j["rows"][0]["a"], 0.5);
        assert_eq!(j["seed"], 7);
    }
}
