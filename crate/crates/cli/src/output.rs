use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::error::CliError;

pub const SCHEMA_LINE: &str = "# schema=qswlab.v1";

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    /// 17 significant digits, so that parsing the text gives back the same bits.
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        writeln!(out, "{SCHEMA_LINE}")?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Array of objects keyed by column name, in column order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::to_json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn csv_error(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Runtime(format!("csv: {other:?}")),
    }
}

/// Rendered result of a command.
pub enum Document {
    Table(Table),
    /// Written verbatim in JSON mode; `csv` is used otherwise.
    Json { json: Value, csv: Table },
}

pub fn write_json<W: Write>(value: &Value, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn emit(doc: &Document, json: bool, path: Option<&Path>) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display())))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match (doc, json) {
        (Document::Table(t), false) | (Document::Json { csv: t, .. }, false) => t.write_csv(sink),
        (Document::Table(t), true) => write_json(&t.to_json(), sink),
        (Document::Json { json: v, .. }, true) => write_json(v, sink),
    }
}
