//! CSV emission with a versioned schema comment line.

use serde::Serialize;

use crate::error::{Error, Result};

/// Renders `rows` as CSV: `# schema: <name> v<version>`, a header row, then
/// one line per row. LF line endings, rows in the given order.
pub fn to_csv<T: Serialize>(name: &str, version: u32, rows: &[T]) -> Result<String> {
    let mut out = format!("# schema: {name} v{version}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        for r in rows {
            w.serialize(r).map_err(|e| Error::param("csv", e.to_string()))?;
        }
        w.flush().map_err(|e| Error::param("csv", e.to_string()))?;
    }
    String::from_utf8(out).map_err(|e| Error::param("csv", e.to_string()))
}

/// Like [`to_csv`] for rows whose columns are only known at run time.
pub fn records_to_csv<I, R>(name: &str, version: u32, header: &[String], records: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut out = format!("# schema: {name} v{version}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(header).map_err(|e| Error::param("csv", e.to_string()))?;
        for r in records {
            w.write_record(r).map_err(|e| Error::param("csv", e.to_string()))?;
        }
        w.flush().map_err(|e| Error::param("csv", e.to_string()))?;
    }
    String::from_utf8(out).map_err(|e| Error::param("csv", e.to_string()))
}
