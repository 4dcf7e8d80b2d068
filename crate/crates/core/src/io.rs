//! Plain CSV output with fixed float formatting.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` and makes files byte-comparable across runs.

use std::io::{self, Write};

/// One CSV field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Count(u64),
    Float(f64),
    Text(&'static str),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<f32> for Cell {
    fn from(v: f32) -> Self {
        Cell::Float(v as f64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Count(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Count(v as u64)
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Count(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v:.16e}"),
            Cell::Text(v) => write!(f, "{v}"),
        }
    }
}

/// Writes a header row followed by data rows, `\n`-terminated.
pub fn write_table<W, I, R>(out: &mut W, header: &[&str], rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = R>,
    R: AsRef<[Cell]>,
{
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let row = row.as_ref();
        if row.len() != header.len() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("row has {} fields, header has {}", row.len(), header.len()),
            ));
        }
        let line: Vec<String> = row.iter().map(Cell::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
