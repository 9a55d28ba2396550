use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Family;

pub const RECORD_SCHEMA: &str = "qbattery.records";
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
}

/// One disorder realization at one `N`. Optional fields are absent when the
/// quantity was not requested, is undefined, or the realization failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationRecord {
    pub family: Family,
    pub n: usize,
    pub realization: usize,
    pub seed: u64,
    /// Empty sparsity mask or vanishing variance.
    pub degenerate: bool,
    pub error: Option<String>,
    pub variance: Option<f64>,
    pub gap: Option<f64>,
    pub mu: Option<f64>,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub bhatia_slack: Option<f64>,
    pub tau: Option<f64>,
    pub work: Option<f64>,
    pub power: Option<f64>,
    pub length: Option<f64>,
    pub tau_parallel: Option<f64>,
    pub advantage: Option<f64>,
    pub connection_count: Option<u64>,
    pub lambda2: Option<f64>,
    pub sandwich_fraction: Option<f64>,
}

impl RealizationRecord {
    pub fn empty(family: Family, n: usize, realization: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            realization,
            seed,
            degenerate: false,
            error: None,
            variance: None,
            gap: None,
            mu: None,
            e_min: None,
            e_max: None,
            bhatia_slack: None,
            tau: None,
            work: None,
            power: None,
            length: None,
            tau_parallel: None,
            advantage: None,
            connection_count: None,
            lambda2: None,
            sandwich_fraction: None,
        }
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Writes the schema header followed by one JSON object per line.
pub fn write_records<W: Write>(mut out: W, records: &[RealizationRecord]) -> Result<()> {
    let header = Header { schema: RECORD_SCHEMA.into(), version: RECORD_VERSION };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Numerical(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RealizationRecord>> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or(Error::Parse { line: 1, message: "missing schema header".into() })??;
    let header: Header =
        serde_json::from_str(&first).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if header.schema != RECORD_SCHEMA || header.version != RECORD_VERSION {
        return Err(Error::SchemaMismatch {
            expected: format!("{RECORD_SCHEMA} v{RECORD_VERSION}"),
            found: format!("{} v{}", header.schema, header.version),
        });
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse { line: k + 2, message: e.to_string() })?;
        records.push(record);
    }
    Ok(records)
}

pub fn persist_records(path: &Path, records: &[RealizationRecord]) -> Result<()> {
    write_records(BufWriter::new(File::create(path)?), records)
}

pub fn load_records(path: &Path) -> Result<Vec<RealizationRecord>> {
    read_records(File::open(path)?)
}

/// Flat delimiter-separated form of the records, one row each.
pub fn write_records_csv<W: Write>(out: W, records: &[RealizationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv output failed: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(k: usize) -> RealizationRecord {
        let mut r = RealizationRecord::empty(Family::SparseSyk, 4, k, 0xDEAD_BEEF ^ k as u64);
        r.variance = Some(1.0 / (k as f64 + 3.0));
        r.tau = Some(std::f64::consts::PI * k as f64);
        r.connection_count = Some(k as u64);
        r
    }

    #[test]
    fn empty_round_trip() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        assert!(read_records(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_exact() {
        let records: Vec<_> = (0..50).map(sample).collect();
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn truncated_line_reports_its_number() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[sample(0), sample(1)]).unwrap();
        buf.truncate(buf.len() - 10);
        match read_records(buf.as_slice()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = "{\"schema\":\"qbattery.records\",\"version\":9}\n";
        assert!(matches!(read_records(text.as_bytes()), Err(Error::SchemaMismatch { .. })));
        assert!(matches!(read_records("".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[sample(1), sample(2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("family,n,realization,seed,degenerate"));
    }
}
