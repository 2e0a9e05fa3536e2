//! Flat CSV of risk reports.

use std::io::Write;

use serde::Serialize;

use super::risk::RiskReport;
use crate::error::{Error, Result};
use crate::protocols::Backend;

pub const CSV_COLUMNS: [&str; 11] =
    ["family", "constraint_kind", "constraint_value", "n", "d", "s", "p", "trials", "risk", "stderr", "seed"];

#[derive(Serialize)]
struct Row<'a> {
    family: &'a str,
    constraint_kind: &'a str,
    constraint_value: String,
    n: u64,
    d: usize,
    s: usize,
    p: String,
    trials: u64,
    risk: f64,
    stderr: f64,
    seed: u64,
}

/// One row per grid point of every report, with a header.
pub fn write_csv<W: Write>(reports: &[RiskReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    if reports.iter().all(|r| r.points.is_empty()) {
        w.write_record(CSV_COLUMNS).map_err(err)?;
    }
    for r in reports {
        let c = &r.config;
        for pt in &r.points {
            w.serialize(Row {
                family: c.family.kind.name(),
                constraint_kind: c.constraint_kind(),
                constraint_value: match c.constraint {
                    Backend::Ldp { epsilon } => format!("{epsilon:?}"),
                    Backend::Comm { bits } => bits.to_string(),
                },
                n: pt.n,
                d: c.family.d,
                s: c.family.s,
                p: c.p.to_string(),
                trials: pt.trials,
                risk: pt.risk,
                stderr: pt.stderr,
                seed: c.seed,
            })
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}
