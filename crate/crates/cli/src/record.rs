//! Sweep records and their CSV / JSON-lines encodings.
//!
//! Floats are written with 17 significant digits in CSV and as shortest
//! round-trip literals in JSON, so both parse back to the same `f64`.
//! Non-finite floats become the strings `NaN`, `inf`, `-inf` in JSON.

use std::io::{BufRead, Write};
use std::path::Path;

use serde_json::{Map, Number};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn csv_text(&self) -> String {
        match self {
            Value::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Value::Float(x) => non_finite(*x).to_string(),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Float(x) => match Number::from_f64(*x) {
                Some(n) => serde_json::Value::Number(n),
                None => serde_json::Value::String(non_finite(*x).into()),
            },
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Text(s) => serde_json::Value::String(s.clone()),
        }
    }
}

fn non_finite(x: f64) -> &'static str {
    if x.is_nan() {
        "NaN"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// One output row. Field order is the column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub fields: Vec<(&'static str, Value)>,
}

impl Record {
    pub fn new() -> Self {
        Record { fields: Vec::new() }
    }

    pub fn push(&mut self, key: &'static str, value: Value) -> &mut Self {
        self.fields.push((key, value));
        self
    }

    pub fn float(&mut self, key: &'static str, v: f64) -> &mut Self {
        self.push(key, Value::Float(v))
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn set(&mut self, key: &str, value: Value) {
        if let Some(slot) = self.fields.iter_mut().find(|(k, _)| *k == key) {
            slot.1 = value;
        }
    }
}

impl Default for Record {
    fn default() -> Self {
        Self::new()
    }
}

/// RFC-4180 CSV with a header row taken from the first record.
pub fn write_csv<W: Write>(out: W, records: &[Record]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    let io = |e: csv::Error| CliError::Usage(format!("csv output failed: {e}"));
    if let Some(first) = records.first() {
        w.write_record(first.fields.iter().map(|(k, _)| *k)).map_err(io)?;
    }
    for r in records {
        w.write_record(r.fields.iter().map(|(_, v)| v.csv_text())).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Usage(format!("csv output failed: {e}")))?;
    Ok(())
}

/// One JSON object per line.
pub fn write_json_lines<W: Write>(mut out: W, records: &[Record]) -> std::io::Result<()> {
    for r in records {
        let obj: Map<String, serde_json::Value> = r.fields.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
        serde_json::to_writer(&mut out, &obj)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// A cell read back from a record file.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn num(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    fn from_text(s: &str) -> Cell {
        match s {
            "NaN" => Cell::Num(f64::NAN),
            "inf" => Cell::Num(f64::INFINITY),
            "-inf" => Cell::Num(f64::NEG_INFINITY),
            _ => match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Cell::Num(x),
                _ => Cell::Text(s.to_string()),
            },
        }
    }
}

/// Records read from a CSV or JSON-lines file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// The single `command` value of all rows.
    pub fn command(&self) -> Option<String> {
        let k = self.column("command")?;
        let mut names = self.rows.iter().map(|r| match &r[k] {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => x.to_string(),
        });
        let first = names.next()?;
        names.all(|n| n == first).then_some(first)
    }
}

/// Reads a record file; JSON lines when the first non-blank byte is `{`.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    let bad = |reason: String| CliError::Records { path: path.into(), reason };
    if text.trim_start().starts_with('{') {
        let mut columns: Vec<String> = Vec::new();
        let mut rows = Vec::new();
        for (n, line) in text.as_bytes().lines().enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let obj: Map<String, serde_json::Value> =
                serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
            let keys: Vec<String> = obj.keys().cloned().collect();
            if columns.is_empty() {
                columns = keys;
            } else if keys != columns {
                return Err(bad(format!("line {} has different fields", n + 1)));
            }
            rows.push(
                obj.values()
                    .map(|v| match v {
                        serde_json::Value::Number(x) => Cell::Num(x.as_f64().unwrap_or(f64::NAN)),
                        serde_json::Value::String(s) => Cell::from_text(s),
                        other => Cell::Text(other.to_string()),
                    })
                    .collect(),
            );
        }
        Ok(Table { columns, rows })
    } else {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let columns: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            rows.push(rec.iter().map(Cell::from_text).collect());
        }
        Ok(Table { columns, rows })
    }
}
