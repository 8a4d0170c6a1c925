//! Rendering of command results as JSON, CSV or an aligned text table.
//!
//! A [`Report`] holds scalar fields and named columns of values, numbers
//! being decimal strings. Every output format reads the same strings, so JSON
//! and CSV carry identical numbers.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

/// One column of per-index values. Entries before `first_index` are absent.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub first_index: usize,
    pub values: Vec<Value>,
}

impl Column {
    pub fn new(name: impl Into<String>, first_index: usize, values: Vec<Value>) -> Self {
        Column {
            name: name.into(),
            first_index,
            values,
        }
    }

    /// A column of decimal strings.
    pub fn decimals(name: impl Into<String>, first_index: usize, values: Vec<String>) -> Self {
        Column::new(name, first_index, values.into_iter().map(Value::String).collect())
    }

    fn get(&self, index: usize) -> Option<&Value> {
        index.checked_sub(self.first_index).and_then(|k| self.values.get(k))
    }

    fn end(&self) -> usize {
        self.first_index + self.values.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    /// Fields written before the columns in JSON, in insertion order.
    pub head: Map<String, Value>,
    pub columns: Vec<Column>,
    /// Fields written after the columns.
    pub tail: Map<String, Value>,
    /// `(index, kind)` pairs, rendered as a JSON array and as a CSV column.
    pub violations: Option<Vec<(usize, String)>>,
    /// Rows are records rather than states: no index column.
    pub unindexed: bool,
}

impl Report {
    pub fn head(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.head.insert(key.into(), value.into());
        self
    }

    pub fn tail(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.tail.insert(key.into(), value.into());
        self
    }

    pub fn to_json(&self) -> Value {
        let mut out = self.head.clone();
        for column in &self.columns {
            out.insert(column.name.clone(), Value::Array(column.values.clone()));
        }
        if let Some(violations) = &self.violations {
            let list = violations
                .iter()
                .map(|(index, kind)| serde_json::json!({ "index": index, "kind": kind }))
                .collect();
            out.insert("violations".into(), Value::Array(list));
        }
        out.extend(self.tail.clone());
        Value::Object(out)
    }

    /// Header and rows for the tabular formats. Reports without columns
    /// become a single row of their scalar fields.
    fn grid(&self) -> (Vec<String>, Vec<Vec<String>>) {
        if self.columns.is_empty() {
            let fields: Vec<(String, String)> = self
                .head
                .iter()
                .chain(&self.tail)
                .map(|(k, v)| (k.clone(), scalar(v)))
                .collect();
            let header = fields.iter().map(|(k, _)| k.clone()).collect();
            let row = fields.into_iter().map(|(_, v)| v).collect();
            return (header, vec![row]);
        }
        let mut header = Vec::new();
        if !self.unindexed {
            header.push("index".to_string());
        }
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        if self.violations.is_some() {
            header.push("violations".into());
        }
        let start = self.columns.iter().map(|c| c.first_index).min().unwrap_or(0);
        let end = self.columns.iter().map(Column::end).max().unwrap_or(0);
        let rows = (start..end)
            .map(|i| {
                let mut row = Vec::new();
                if !self.unindexed {
                    row.push(i.to_string());
                }
                row.extend(self.columns.iter().map(|c| c.get(i).map(scalar).unwrap_or_default()));
                if let Some(violations) = &self.violations {
                    let kinds: Vec<&str> = violations
                        .iter()
                        .filter(|(index, _)| *index == i)
                        .map(|(_, kind)| kind.as_str())
                        .collect();
                    row.push(kinds.join(";"));
                }
                row
            })
            .collect();
        (header, rows)
    }

    pub fn write(&self, format: Format, out: &mut impl Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)?;
            }
            Format::Csv => {
                let (header, rows) = self.grid();
                let mut writer = csv::Writer::from_writer(&mut *out);
                writer.write_record(&header)?;
                for row in rows {
                    writer.write_record(&row)?;
                }
                writer.flush()?;
            }
            Format::Table => self.write_table(out)?,
        }
        Ok(())
    }

    fn write_table(&self, out: &mut impl Write) -> Result<()> {
        if self.columns.is_empty() {
            let fields: Vec<_> = self.head.iter().chain(&self.tail).collect();
            let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (key, value) in fields {
                writeln!(out, "{key:<width$}  {}", scalar(value))?;
            }
            return Ok(());
        }
        for (key, value) in self.head.iter().chain(&self.tail) {
            writeln!(out, "{key}: {}", scalar(value))?;
        }
        writeln!(out)?;
        let (header, rows) = self.grid();
        let widths: Vec<usize> = (0..header.len())
            .map(|j| {
                rows.iter()
                    .map(|r| r[j].len())
                    .chain([header[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            padded.join("  ").trim_end().to_string()
        };
        writeln!(out, "{}", line(&header))?;
        for row in &rows {
            writeln!(out, "{}", line(row))?;
        }
        Ok(())
    }
}

/// A JSON value as one table cell: strings unquoted, objects flattened.
fn scalar(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| format!("{k}={}", scalar(v)))
            .collect::<Vec<_>>()
            .join(" "),
        other => other.to_string(),
    }
}
