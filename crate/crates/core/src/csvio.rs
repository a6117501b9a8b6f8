//! CSV import and export of `(a, b)` sample sets.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    a: f64,
    b: f64,
}

/// Reads `(a, b)` pairs from CSV with header `a,b`.
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "a" || &headers[1] != "b" {
        return Err(Error::Csv(format!("expected header `a,b`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        if !row.a.is_finite() || !row.b.is_finite() {
            return Err(Error::Csv("non-finite sample".into()));
        }
        out.push((row.a, row.b));
    }
    Ok(out)
}

/// Writes `(a, b)` pairs with header `a,b`. Values are printed with the
/// shortest representation that round-trips exactly.
pub fn write_samples<W: Write>(writer: W, samples: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for &(a, b) in samples {
        w.serialize(Row { a, b })?;
    }
    w.flush()?;
    Ok(())
}
