//! Headered CSV reading with line-numbered errors, and buffered file output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub(crate) struct CsvRows {
    path: PathBuf,
    reader: csv::Reader<File>,
}

/// Opens a headered CSV file and checks that its leading columns match
/// `expected`.
pub(crate) fn open_csv(path: &Path, expected: &[&str]) -> Result<CsvRows> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    for (i, want) in expected.iter().enumerate() {
        match headers.get(i) {
            Some(h) if h == *want => {}
            got => {
                return Err(Error::parse(
                    path,
                    1,
                    format!("expected column {i} to be {want:?}, found {got:?}"),
                ))
            }
        }
    }
    Ok(CsvRows {
        path: path.to_owned(),
        reader,
    })
}

pub(crate) struct Row {
    pub line: u64,
    pub record: csv::StringRecord,
}

impl CsvRows {
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn rows(&mut self) -> impl Iterator<Item = Result<Row>> + '_ {
        let path = self.path.clone();
        self.reader.records().map(move |r| {
            let record = r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::parse(&path, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            Ok(Row { line, record })
        })
    }
}

impl Row {
    pub fn str(&self, path: &Path, col: usize, name: &str) -> Result<&str> {
        self.record
            .get(col)
            .ok_or_else(|| Error::parse(path, self.line, format!("missing column {name}")))
    }

    pub fn parse<T: std::str::FromStr>(&self, path: &Path, col: usize, name: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.str(path, col, name)?;
        raw.parse::<T>()
            .map_err(|e| Error::parse(path, self.line, format!("{name} {raw:?}: {e}")))
    }

    pub fn expect_len(&self, path: &Path, n: usize) -> Result<()> {
        if self.record.len() != n {
            return Err(Error::parse(
                path,
                self.line,
                format!("expected {n} fields, found {}", self.record.len()),
            ));
        }
        Ok(())
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

