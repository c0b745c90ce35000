//! Result tables and their serialised forms.
//!
//! One row per computed cell. Optional columns are empty in CSV and `null`
//! in JSON: a missing `value` marks a recorded solver failure, and `se`,
//! `ci_lo`, `ci_hi` only apply to Monte-Carlo rows. When timings are off
//! every `wall_ms` is zero, which keeps repeated runs byte-identical.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, XvaError};
use crate::harness::config::OutputFormat;

/// Column order is the serialisation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub solver: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub tau: f64,
    pub x: f64,
    pub value: Option<f64>,
    pub benchmark: Option<f64>,
    pub abs_error: Option<f64>,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub wall_ms: f64,
}

/// Writes the table to `out` in the requested format.
pub fn emit(rows: &[ResultRow], format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                // Serde-driven writers only learn the header from a record,
                // so an empty table writes it explicitly.
                w.write_record([
                    "scenario",
                    "solver",
                    "sweep_param",
                    "sweep_value",
                    "tau",
                    "x",
                    "value",
                    "benchmark",
                    "abs_error",
                    "se",
                    "ci_lo",
                    "ci_hi",
                    "wall_ms",
                ])
                .map_err(csv_err)?;
            }
            for row in rows {
                w.serialize(row).map_err(csv_err)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)
                .map_err(|e| XvaError::Solver(format!("json serialisation failed: {e}")))?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Writes the table to a file, reporting the path on I/O failure.
pub fn emit_to_path(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    let attach = |e: std::io::Error| {
        XvaError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    };
    let file = std::fs::File::create(path).map_err(attach)?;
    let mut buf = std::io::BufWriter::new(file);
    emit(rows, format, &mut buf).map_err(|e| match e {
        XvaError::Io(io) => attach(io),
        other => other,
    })?;
    buf.flush().map_err(attach)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> XvaError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => XvaError::Io(io),
        other => XvaError::Solver(format!("csv serialisation failed: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            scenario: "demo".into(),
            solver: "analytic".into(),
            sweep_param: "grid.delta_x".into(),
            sweep_value: 0.015625,
            tau: 2.0,
            x: 2.4849066497880004,
            value: Some(-0.07517062917902745),
            benchmark: Some(-0.07517062917902745),
            abs_error: Some(0.0),
            se: None,
            ci_lo: None,
            ci_hi: None,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn empty_table_is_header_only_csv() {
        let mut buf = Vec::new();
        emit(&[], OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.trim_end(),
            "scenario,solver,sweep_param,sweep_value,tau,x,value,benchmark,abs_error,se,ci_lo,ci_hi,wall_ms"
        );
    }

    #[test]
    fn optional_columns_serialise_as_empty_cells() {
        let mut buf = Vec::new();
        emit(&[sample_row()], OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data = text.lines().nth(1).unwrap();
        assert!(data.ends_with(",0.0,,,,0.0"), "{data}");
        assert!(data.starts_with("demo,analytic,grid.delta_x,"), "{data}");
    }

    #[test]
    fn json_round_trips() {
        let rows = vec![sample_row()];
        let mut buf = Vec::new();
        emit(&rows, OutputFormat::Json, &mut buf).unwrap();
        let back: Vec<ResultRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn unwritable_path_reports_the_path() {
        let err = emit_to_path(
            &[],
            OutputFormat::Csv,
            Path::new("/nonexistent-dir/out.csv"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir"), "{err}");
    }

    #[test]
    fn csv_emission_is_deterministic() {
        let rows = vec![sample_row(), sample_row()];
        let mut a = Vec::new();
        let mut b = Vec::new();
        emit(&rows, OutputFormat::Csv, &mut a).unwrap();
        emit(&rows, OutputFormat::Csv, &mut b).unwrap();
        assert_eq!(a, b);
    }
}
