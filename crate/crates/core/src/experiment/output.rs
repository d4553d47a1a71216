//! Tabular results and their CSV / JSON encodings.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config(format!("unknown output format {other:?}"))),
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Fixed 9-decimal rendering; `-0` prints as `0`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.9}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => {
                let rounded: f64 = format_number(*v).parse().expect("formatted float parses");
                Number::from_f64(rounded).map_or(Value::Null, Value::Number)
            }
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric value at `(row, column)`, for callers that inspect results.
    pub fn num(&self, row: usize, column: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(column)?)? {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn text(&self, row: usize, column: &str) -> Option<&str> {
        match self.rows.get(row)?.get(self.column(column)?)? {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn flag(&self, row: usize, column: &str) -> Option<bool> {
        match self.rows.get(row)?.get(self.column(column)?)? {
            Cell::Bool(b) => Some(*b),
            _ => None,
        }
    }

    fn write_csv<W: Write>(&self, header: &str, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "{header}")?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    fn records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::config(format!("csv encoding failed: {other:?}")),
    }
}

/// The tables of one run; the first is the primary output.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub spec: Value,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// `# serialdep seed=<seed> spec=<compact json>`.
    pub fn header_line(&self) -> String {
        format!("# serialdep seed={} spec={}", self.seed, self.spec)
    }

    /// Writes the report; returns the files produced.
    ///
    /// CSV: the primary table goes to `path`, every other table `name` to
    /// `<stem>.<name>.csv` beside it. JSON: a single document at `path`.
    /// Without a path, everything goes to stdout.
    pub fn write(&self, path: Option<&Path>, format: OutputFormat) -> Result<Vec<PathBuf>> {
        match path {
            Some(p) => self.write_files(p, format),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                self.write_stream(&mut lock, format)?;
                Ok(Vec::new())
            }
        }
    }

    pub fn write_stream<W: Write>(&self, out: &mut W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.json())?;
                writeln!(out)?;
            }
            OutputFormat::Csv => {
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        writeln!(out, "\n# table {}", t.name)?;
                    }
                    t.write_csv(&self.header_line(), &mut *out)?;
                }
            }
        }
        Ok(())
    }

    fn write_files(&self, path: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                return Err(Error::config(format!(
                    "output directory {} does not exist",
                    dir.display()
                )));
            }
        }
        match format {
            OutputFormat::Json => {
                let mut f = fs::File::create(path)?;
                self.write_stream(&mut f, format)?;
                Ok(vec![path.to_path_buf()])
            }
            OutputFormat::Csv => {
                let mut written = Vec::new();
                for (i, t) in self.tables.iter().enumerate() {
                    let p = if i == 0 {
                        path.to_path_buf()
                    } else {
                        sibling(path, &t.name, format)
                    };
                    let f = fs::File::create(&p)?;
                    t.write_csv(&self.header_line(), std::io::BufWriter::new(f))?;
                    written.push(p);
                }
                Ok(written)
            }
        }
    }

    pub fn json(&self) -> Value {
        let tables: Map<String, Value> = self.tables.iter().map(|t| (t.name.clone(), t.records())).collect();
        serde_json::json!({
            "header": { "seed": self.seed, "spec": self.spec },
            "tables": tables,
        })
    }
}

/// `dir/stem.name.ext` for an output path `dir/stem.ext`.
pub fn sibling(path: &Path, name: &str, format: OutputFormat) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{name}.{}", format.extension()))
}
