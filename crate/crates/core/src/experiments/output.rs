//! CSV emission for experiment tables.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::duality::DualityEstimate;
use crate::error::Result;

/// One row of `duality.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityRow {
    pub m: i64,
    pub n: i64,
    #[serde(rename = "S")]
    pub samples: u64,
    pub p_lhs: f64,
    pub se_lhs: f64,
    pub p_rhs: f64,
    pub se_rhs: f64,
    pub z: f64,
}

impl From<&DualityEstimate> for DualityRow {
    fn from(e: &DualityEstimate) -> Self {
        DualityRow {
            m: e.m,
            n: e.n,
            samples: e.samples_lhs.min(e.samples_rhs),
            p_lhs: e.p_lhs,
            se_lhs: e.se_lhs,
            p_rhs: e.p_rhs,
            se_rhs: e.se_rhs,
            z: e.z,
        }
    }
}

/// Serializes `rows` with a header line into a CSV string.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `rows` to `path`. An empty table still gets its header when
/// `header` is given.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let text = if rows.is_empty() {
        format!("{}\n", header.join(","))
    } else {
        to_csv(rows)?
    };
    File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}
