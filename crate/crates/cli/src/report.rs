use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::config::Config;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Clone, Debug, Serialize)]
pub struct Invariant {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Config,
    pub invariants: Vec<Invariant>,
    pub notes: Vec<String>,
    pub data: serde_json::Value,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, config: &Config) -> Self {
        Report {
            command: command.to_string(),
            config: config.clone(),
            invariants: Vec::new(),
            notes: Vec::new(),
            data: serde_json::Value::Null,
            pass: true,
        }
    }

    /// `value ≤ bound`.
    pub fn le(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name.into(), value, bound, Relation::Le, value <= bound);
    }

    /// Exact equality, decided by the caller.
    pub fn eq(&mut self, name: impl Into<String>, value: f64, bound: f64, pass: bool) {
        self.push(name.into(), value, bound, Relation::Eq, pass);
    }

    fn push(&mut self, name: String, value: f64, bound: f64, relation: Relation, pass: bool) {
        self.pass &= pass;
        self.invariants.push(Invariant {
            name,
            value,
            bound,
            relation,
            pass,
        });
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats::default());
        self.serialize(&mut ser).expect("report serializes");
        out.push(b'\n');
        out
    }
}

/// Pretty JSON with every float printed to 17 significant digits.
#[derive(Default)]
struct FixedFloats {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

/// A CSV table and its gnuplot twin, built row by row.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Whitespace-separated columns with a `#` header; empty cells become `?`.
    pub fn dat(&self, columns: &[usize]) -> Vec<u8> {
        let mut s = String::from("#");
        for &c in columns {
            s.push(' ');
            s.push_str(self.header[c]);
        }
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<&str> = columns
                .iter()
                .map(|&c| if r[c].is_empty() { "?" } else { r[c].as_str() })
                .collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s.into_bytes()
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}
