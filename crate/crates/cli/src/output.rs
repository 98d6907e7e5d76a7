//! CSV and JSON encodings of engine results.

use std::io::{Read, Write};

use adaptlab_core::simulation::{BoundCheck, RateReport};
use adaptlab_core::{BoundRow, CellSummary, ReplicationRecord};

use crate::{CliError, Result};

pub const CELLS_HEADER: [&str; 9] = [
    "n",
    "R_effective",
    "mse_pop",
    "mse_pop_se",
    "mse_adaptive",
    "mse_adaptive_se",
    "mismatch_rate",
    "mismatch_se",
    "discards",
];
pub const REPS_HEADER: [&str; 7] = ["n", "rep", "theta_hat", "theta_Fn", "err_pop", "err_adaptive", "mismatch"];
pub const BOUNDS_HEADER: [&str; 5] = ["n", "mismatch_prob", "mse_bound", "n_times_bound", "exact_mse"];
pub const BOUND_CHECK_HEADER: [&str; 7] = [
    "n",
    "mse_adaptive",
    "mse_adaptive_se",
    "mse_bound",
    "exact_mse",
    "within_bound",
    "oracle_agrees",
];

/// Shortest decimal that parses back to the same `f64`. Plain notation in
/// `[1e-5, 1e16)`, scientific outside it.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_error(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io("<csv stream>", source),
        other => CliError::Schema {
            path: "csv".into(),
            message: format!("{other:?}"),
        },
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub fn write_cells<W: Write>(out: W, cells: &[CellSummary]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CELLS_HEADER).map_err(csv_error)?;
    for c in cells {
        w.write_record([
            c.n.to_string(),
            c.r_effective.to_string(),
            fmt_f64(c.mse_pop),
            fmt_f64(c.mse_pop_se),
            fmt_f64(c.mse_adaptive),
            fmt_f64(c.mse_adaptive_se),
            fmt_f64(c.mismatch_rate),
            fmt_f64(c.mismatch_se),
            c.discards.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::io("<csv stream>", e))
}

pub fn write_reps<W: Write>(out: W, records: &[ReplicationRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(REPS_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.rep.to_string(),
            fmt_f64(r.theta_hat),
            fmt_f64(r.theta_fn),
            fmt_f64(r.err_pop),
            fmt_f64(r.err_adaptive),
            u8::from(r.mismatch).to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::io("<csv stream>", e))
}

pub fn write_bounds<W: Write>(out: W, rows: &[BoundRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(BOUNDS_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt_sig12(r.mismatch_prob),
            fmt_sig12(r.mse_bound),
            fmt_sig12(r.n_times_bound),
            fmt_sig12(r.exact_mse),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::io("<csv stream>", e))
}

pub fn write_bound_checks<W: Write>(out: W, checks: &[BoundCheck]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(BOUND_CHECK_HEADER).map_err(csv_error)?;
    for b in checks {
        w.write_record([
            b.n.to_string(),
            fmt_f64(b.mse_adaptive),
            fmt_f64(b.mse_adaptive_se),
            fmt_f64(b.mse_bound),
            fmt_f64(b.exact_mse),
            b.within_bound.to_string(),
            b.oracle_agrees.map_or_else(|| "NA".to_string(), |v| v.to_string()),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::io("<csv stream>", e))
}

/// Reads a `cells.csv` stream, requiring the exact header.
pub fn read_cells<R: Read>(input: R) -> Result<Vec<CellSummary>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CELLS_HEADER.iter().copied()) {
        return Err(CliError::Schema {
            path: "cells.csv header".into(),
            message: format!("expected `{}`, got `{}`", CELLS_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut cells = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(csv_error)?;
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| CliError::Schema {
                path: format!("cells.csv row {}", line + 1),
                message: format!("missing column `{}`", CELLS_HEADER[i]),
            })
        };
        let int = |i: usize| -> Result<u64> {
            field(i)?.parse().map_err(|_| CliError::Schema {
                path: format!("cells.csv row {} column {}", line + 1, CELLS_HEADER[i]),
                message: format!("not an unsigned integer: `{}`", field(i).unwrap_or("")),
            })
        };
        let real = |i: usize| -> Result<f64> {
            field(i)?.parse().map_err(|_| CliError::Schema {
                path: format!("cells.csv row {} column {}", line + 1, CELLS_HEADER[i]),
                message: format!("not a number: `{}`", field(i).unwrap_or("")),
            })
        };
        cells.push(CellSummary {
            n: int(0)?,
            r_effective: int(1)?,
            mse_pop: real(2)?,
            mse_pop_se: real(3)?,
            mse_adaptive: real(4)?,
            mse_adaptive_se: real(5)?,
            mismatch_rate: real(6)?,
            mismatch_se: real(7)?,
            discards: int(8)?,
        });
    }
    Ok(cells)
}

/// Pretty JSON with a trailing newline.
pub fn rates_json(report: &RateReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("rate report serializes");
    s.push('\n');
    s
}
