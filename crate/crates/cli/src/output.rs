use std::io::Write;
use std::path::Path;

use crate::CliError;

/// A CSV table held as text cells. Empty cells mark missing values.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to<W: Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(sink);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Writes the table to `path`, or to stdout when `path` is `None`. The
/// summary goes to stdout when the table goes to a file, otherwise to stderr.
pub fn emit(table: &Table, summary: &[String], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            table
                .write_to(std::io::BufWriter::new(file))
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            table
                .write_to(std::io::stdout().lock())
                .map_err(|e| CliError::Validation(format!("stdout: {e}")))?;
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}
