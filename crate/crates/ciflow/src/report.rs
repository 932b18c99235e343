//! Report rendering. Every report is one JSON document plus a set of flat
//! tables, written as CSV (one file per table) or as a Markdown page.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::output::write_atomic;
use crate::standoff::to_json_bytes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    /// File stem for CSV output.
    pub name: String,
    /// Heading in Markdown output.
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, title: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    pub fn to_markdown(&self) -> String {
        let cell = |s: &str| s.replace('|', "\\|").replace('\n', " ");
        let mut out = String::new();
        let _ = writeln!(out, "## {}\n", self.title);
        if self.rows.is_empty() {
            out.push_str("(none)\n");
            return out;
        }
        let _ = writeln!(out, "| {} |", self.columns.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | "));
        let _ = writeln!(out, "|{}|", vec!["---"; self.columns.len()].join("|"));
        for row in &self.rows {
            let _ = writeln!(out, "| {} |", row.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | "));
        }
        out
    }
}

/// A rendered analysis result.
pub struct Report {
    pub name: String,
    pub json: Vec<u8>,
    pub tables: Vec<Table>,
    /// Markdown tables when they differ from the CSV tables.
    pub markdown_tables: Option<Vec<Table>>,
}

impl Report {
    pub fn new<T: Serialize + ?Sized>(name: &str, value: &T, tables: Vec<Table>) -> Self {
        Report {
            name: name.into(),
            json: to_json_bytes(value),
            tables,
            markdown_tables: None,
        }
    }

    pub fn markdown(&self) -> String {
        let tables = self.markdown_tables.as_ref().unwrap_or(&self.tables);
        let mut out = format!("# {}\n", self.name);
        for t in tables {
            out.push('\n');
            out.push_str(&t.to_markdown());
        }
        out
    }

    /// Writes the report in each format: into `out` when given, otherwise
    /// to `stdout`.
    pub fn emit(
        &self,
        formats: &[Format],
        out: Option<&Path>,
        force: bool,
        stdout: &mut dyn std::io::Write,
    ) -> Result<()> {
        let mut formats = formats.to_vec();
        formats.sort();
        formats.dedup();
        for format in formats {
            match (format, out) {
                (Format::Json, Some(dir)) => {
                    write_atomic(&dir.join(format!("{}.json", self.name)), &self.json, force)?
                }
                (Format::Csv, Some(dir)) => {
                    for t in &self.tables {
                        write_atomic(&dir.join(format!("{}.csv", t.name)), &t.to_csv(), force)?;
                    }
                }
                (Format::Md, Some(dir)) => write_atomic(
                    &dir.join(format!("{}.md", self.name)),
                    self.markdown().as_bytes(),
                    force,
                )?,
                (Format::Json, None) => write_stdout(stdout, &self.json),
                (Format::Csv, None) => {
                    for (i, t) in self.tables.iter().enumerate() {
                        if i > 0 {
                            write_stdout(stdout, b"\n");
                        }
                        write_stdout(stdout, format!("# {}\n", t.name).as_bytes());
                        write_stdout(stdout, &t.to_csv());
                    }
                }
                (Format::Md, None) => write_stdout(stdout, self.markdown().as_bytes()),
            }
        }
        Ok(())
    }
}

fn write_stdout(out: &mut dyn std::io::Write, bytes: &[u8]) {
    // a closed pipe is not an analysis failure
    let _ = out.write_all(bytes);
}

/// Shortest representation that reads back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
