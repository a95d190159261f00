//! Fixed-header numeric tables on top of the `csv` crate.

use std::path::Path;

use crate::error::{Error, Result};

/// Floats are written with 17 significant digits, enough to round-trip.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn convert(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::SchemaMismatch(format!("{}: {other:?}", path.display())),
    }
}

pub(crate) fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| convert(path, e))?;
    w.write_record(header).map_err(|e| convert(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| convert(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads all rows after checking the header matches `header` exactly.
pub(crate) fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| convert(path, e))?;
    let mut records = r.records();
    let found = match records.next() {
        Some(h) => h.map_err(|e| convert(path, e))?,
        None => csv::StringRecord::new(),
    };
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::SchemaMismatch(format!(
            "{}: unexpected header {:?}",
            path.display(),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    records
        .map(|rec| rec.map_err(|e| convert(path, e)))
        .collect()
}

pub(crate) fn parse_fields(rec: &csv::StringRecord, row: usize) -> Result<Vec<f64>> {
    rec.iter()
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::SchemaMismatch(format!("row {row}: {e}")))
}
