//! Sweep results as CSV.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "variable",
    "value",
    "scheme",
    "mean_rsum",
    "stderr_rsum",
    "mean_rn",
    "mean_rm",
    "mean_eta",
    "mean_iters",
    "trials",
];

/// One (curve, value, scheme) aggregate. `variable` names the swept
/// quantity, followed by `|name=value;...` for curve settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variable: String,
    pub value: f64,
    pub scheme: String,
    pub mean_rsum: f64,
    pub stderr_rsum: f64,
    pub mean_rn: f64,
    pub mean_rm: f64,
    pub mean_eta: f64,
    pub mean_iters: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Rows of one curve and scheme, in file order.
    pub fn curve<'a>(&'a self, variable: &'a str, scheme: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.variable == variable && r.scheme == scheme)
    }
}

/// Parse a sweep CSV; the header must match exactly.
pub fn read_csv<R: Read>(input: R) -> Result<SweepResult> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::parse("header", format!("expected `{}`", CSV_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(SweepResult { rows })
}
