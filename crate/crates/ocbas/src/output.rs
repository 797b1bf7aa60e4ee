//! CSV formats. Floats are written with Rust's shortest round-trip
//! formatting, so parsing a file recovers every value exactly.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use ocbas_core::testbeds::smoke::DesignEstimate;

use crate::harness::{ExperimentResult, PcsRow};
use crate::HarnessError;

pub const PCS_HEADER: [&str; 6] = [
    "policy",
    "budget",
    "pcs",
    "std_err",
    "macro_reps",
    "mean_consumed_time",
];

pub const SMOKE_HEADER: [&str; 5] = ["index", "design", "mean_response", "std_err", "reps"];

pub fn write_pcs<W: Write>(result: &ExperimentResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PCS_HEADER)?;
    for r in &result.rows {
        w.write_record([
            r.policy.name().to_string(),
            r.budget.to_string(),
            r.pcs.to_string(),
            r.std_err.to_string(),
            r.macro_reps.to_string(),
            r.mean_consumed_time.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the PCS table to `path`.
pub fn write_csv(result: &ExperimentResult, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    write_pcs(result, io::BufWriter::new(file)).map_err(|source| HarnessError::Csv {
        path: path.to_owned(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<PcsRow>, HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |what: &str| HarnessError::Plan(format!("{}: bad {what}", path.display()));
        rows.push(PcsRow {
            policy: field(0).parse().map_err(|_| bad("policy"))?,
            budget: field(1).parse().map_err(|_| bad("budget"))?,
            pcs: field(2).parse().map_err(|_| bad("pcs"))?,
            std_err: field(3).parse().map_err(|_| bad("std_err"))?,
            macro_reps: field(4).parse().map_err(|_| bad("macro_reps"))?,
            mean_consumed_time: field(5).parse().map_err(|_| bad("mean_consumed_time"))?,
        });
    }
    Ok(rows)
}

pub fn write_smoke_table<W: Write>(estimates: &[DesignEstimate], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SMOKE_HEADER)?;
    for (i, e) in estimates.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.placement.to_string(),
            e.mean.to_string(),
            e.std_err.to_string(),
            e.reps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column `time,frequency` table.
pub fn write_pmf<W: Write>(pmf: &[(u64, f64)], header: [&str; 2], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for (t, p) in pmf {
        w.write_record([t.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
