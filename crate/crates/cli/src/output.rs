//! Tables and their CSV / JSON renderings, written atomically.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use excess_entropy::excess::Quantity;

pub const MIN_PRECISION: usize = 4;
pub const MAX_PRECISION: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub format: Format,
    /// `None` writes to stdout.
    pub path: Option<PathBuf>,
    pub precision: usize,
}

/// `v` rounded to `precision` significant digits, printed in its shortest
/// round-trip form. Non-finite values print as `inf`, `-inf`, `nan`.
pub fn render_number(v: f64, precision: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded = round_sig(v, precision);
    let a = rounded.abs();
    if rounded != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

/// Rounds through the decimal scientific representation, so the result is
/// exactly the number a reader of the rendered text recovers.
pub fn round_sig(v: f64, precision: usize) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    let digits = precision.clamp(1, MAX_PRECISION) - 1;
    format!("{v:.digits$e}")
        .parse()
        .expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Quantity> for Cell {
    fn from(q: Quantity) -> Self {
        Cell::Num(q.as_f64())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A command result: key/value metadata plus a rectangular table.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: String,
    pub meta: Vec<(String, Cell)>,
    /// Free-text notes, printed as CSV comments.
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            meta: Vec::new(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, precision: usize) -> String {
        let render = |c: &Cell| match c {
            Cell::Num(v) => render_number(*v, precision),
            Cell::Text(s) => s.clone(),
        };
        let mut head = format!("# excess-entropy {}\n", self.command);
        for (k, v) in &self.meta {
            head.push_str(&format!("# {k} = {}\n", render(v)));
        }
        for n in &self.notes {
            head.push_str(&format!("# {n}\n"));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(head.into_bytes());
        w.write_record(&self.columns).expect("write to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(render))
                .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 output")
    }

    pub fn to_json(&self, precision: usize) -> String {
        let value = |c: &Cell| match c {
            Cell::Num(v) if v.is_finite() => Value::from(round_sig(*v, precision)),
            Cell::Num(v) => Value::from(render_number(*v, precision)),
            Cell::Text(s) => Value::from(s.as_str()),
        };
        let mut doc = Map::new();
        doc.insert("command".into(), Value::from(self.command.as_str()));
        let meta: Map<String, Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), value(v)))
            .collect();
        doc.insert("meta".into(), Value::Object(meta));
        if !self.notes.is_empty() {
            doc.insert("notes".into(), Value::from(self.notes.clone()));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(r.iter().map(value))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        doc.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON encodes");
        s.push('\n');
        s
    }
}

/// Writes via a sibling temporary file and a rename, so readers never see
/// a partial file. `None` prints to stdout.
pub fn write_output(path: Option<&Path>, contents: &str) -> io::Result<()> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        out.write_all(contents.as_bytes())?;
        return out.flush();
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
