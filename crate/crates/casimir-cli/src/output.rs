//! Tables and records, written as CSV, JSON or SVG.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::settings::{Format, RunConfig};
use crate::svg::Plot;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(n) => json!(n),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(fmt_float(*x)),
            Cell::Text(s) => json!(s),
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
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, comment: &str, mut w: W) -> CliResult<()> {
        writeln!(w, "# {comment}")?;
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::render))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self, comment: &str) -> Value {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
        json!({ "config": comment, "columns": self.header, "rows": rows })
    }
}

/// Where results go: files under `--out`, or stdout.
pub struct Sink {
    out: Option<PathBuf>,
    emit: Vec<Format>,
    comment: String,
}

impl Sink {
    pub fn new(rc: &RunConfig, comment: String) -> CliResult<Sink> {
        if let Some(dir) = &rc.out {
            fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))?;
            let probe = dir.join(".casimir-write-test");
            fs::write(&probe, b"").map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
            let _ = fs::remove_file(probe);
        }
        Ok(Sink { out: rc.out.clone(), emit: rc.emit.clone(), comment })
    }

    pub fn comment(&self) -> &str {
        &self.comment
    }

    fn path(&self, name: &str, ext: &str) -> Option<PathBuf> {
        self.out.as_deref().map(|d: &Path| d.join(format!("{name}.{ext}")))
    }

    /// Emit a table in every requested format; SVG only with an output directory.
    pub fn table(&self, table: &Table, plot: Option<&Plot>) -> CliResult<()> {
        for f in &self.emit {
            match f {
                Format::Csv => match self.path(&table.name, "csv") {
                    Some(p) => table.write_csv(&self.comment, io::BufWriter::new(fs::File::create(p)?))?,
                    None => table.write_csv(&self.comment, io::stdout().lock())?,
                },
                Format::Json => self.json(&table.name, &table.to_json(&self.comment))?,
                Format::Svg => match (self.path(&table.name, "svg"), plot) {
                    (Some(p), Some(plot)) => fs::write(p, plot.render(table))?,
                    (None, Some(_)) => eprintln!("note: SVG output needs --out; skipped {}", table.name),
                    _ => {}
                },
            }
        }
        Ok(())
    }

    /// Always written, whatever `--emit` says: the record is the command's result.
    pub fn record(&self, name: &str, value: &Value) -> CliResult<()> {
        self.json(name, value)
    }

    /// A secondary table that is only useful as a file.
    pub fn side_table(&self, table: &Table) -> CliResult<()> {
        if let Some(p) = self.path(&table.name, "csv") {
            table.write_csv(&self.comment, io::BufWriter::new(fs::File::create(p)?))?;
        }
        Ok(())
    }

    fn json(&self, name: &str, value: &Value) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)?;
        match self.path(name, "json") {
            Some(p) => fs::write(p, text + "\n")?,
            None => {
                let mut o = io::stdout().lock();
                writeln!(o, "{text}")?;
            }
        }
        Ok(())
    }
}
