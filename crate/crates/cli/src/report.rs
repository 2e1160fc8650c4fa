//! Tabular reports with a self-describing header, written as CSV or JSON lines.
//!
//! CSV reports start with `#`-prefixed header lines (`# schema: ...` and
//! `# config: {...}`) followed by a column row. JSON-lines reports start
//! with one `{"schema": ..., "config": ...}` object. Undefined values are
//! empty CSV fields or JSON `null`.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Value};

use crate::config::Format;

pub const LOSS_SCHEMA: &str = "phaseloss.loss/1";
pub const METRICS_SCHEMA: &str = "phaseloss.metrics/1";
pub const INSPECT_SCHEMA: &str = "phaseloss.inspect/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(Option<f64>),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(Some(v)) => format!("{v:?}"),
            Cell::Num(None) => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Int(i) => Value::from(*i),
            Cell::Num(v) => v.map_or(Value::Null, Value::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Jsonl => self.write_jsonl(out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# schema: {}", self.schema)?;
        writeln!(out, "# config: {}", serde_json::to_string(&self.config)?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_jsonl(&self, out: &mut dyn Write) -> Result<()> {
        let mut header = Map::new();
        header.insert("schema".into(), Value::from(self.schema));
        header.insert("config".into(), self.config.clone());
        writeln!(out, "{}", Value::Object(header))?;
        for row in &self.rows {
            let obj: Map<String, Value> = self
                .columns
                .iter()
                .cloned()
                .zip(row.iter().map(Cell::json))
                .collect();
            writeln!(out, "{}", Value::Object(obj))?;
        }
        Ok(())
    }

    pub fn to_string(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(String::from_utf8(buf)?)
    }
}
