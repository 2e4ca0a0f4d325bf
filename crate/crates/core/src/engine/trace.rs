use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One simulation sample. Currents in A, voltages in V, energy in J.
///
/// For the simplified controller `d1_hat` carries the input-voltage estimate `Ê`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub i1: f64,
    pub vc: f64,
    pub i2: f64,
    pub xc: f64,
    pub mu: f64,
    pub mu_saturated_flag: u8,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d1_hat: f64,
    pub d2_hat: f64,
    pub d3_hat: f64,
    #[serde(rename = "Hd")]
    pub hd: f64,
    pub condition12_ratio: f64,
}

pub const TRACE_HEADER: [&str; 15] = [
    "t",
    "i1",
    "vc",
    "i2",
    "xc",
    "mu",
    "mu_saturated_flag",
    "d1",
    "d2",
    "d3",
    "d1_hat",
    "d2_hat",
    "d3_hat",
    "Hd",
    "condition12_ratio",
];

pub fn write_trace_csv<W: Write>(writer: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(TRACE_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
