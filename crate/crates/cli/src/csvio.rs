//! CSV emission and parsing for run records. The format is fixed-schema, so
//! a hand-rolled writer keeps the bytes deterministic and exactly
//! round-trippable (floats are printed with Rust's shortest round-trip
//! formatting).

use std::fmt::Write as _;

use tvopt_core::record::{IterationRow, RunRecord};

pub const HEADER: &str = "k,comms,subgrads,model_time,primal_gap,consensus,cert_margin";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders a record as CSV, with the seed recorded in a leading `#` comment
/// when given.
pub fn write_record(record: &RunRecord, seed: Option<u64>) -> String {
    let mut out = String::new();
    if let Some(seed) = seed {
        let _ = writeln!(out, "# seed={seed}");
    }
    let _ = writeln!(out, "{HEADER}");
    for row in &record.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.k,
            row.comms,
            row.subgrads,
            row.model_time,
            fmt_opt(row.primal_gap),
            row.consensus,
            fmt_opt(row.cert_margin),
        );
    }
    out
}

fn parse_opt(field: &str) -> Result<Option<f64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| format!("bad float `{field}`: {e}"))
}

/// Parses CSV produced by [`write_record`] back into the row series.
/// Comment lines are skipped; the header is required.
pub fn parse_record(text: &str) -> Result<RunRecord, String> {
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        other => return Err(format!("missing header, got {other:?}")),
    }
    let mut record = RunRecord::default();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(format!("row {idx}: expected 7 fields, got {}", fields.len()));
        }
        let parse_int = |f: &str| f.parse::<u64>().map_err(|e| format!("row {idx}: {e}"));
        record.push(IterationRow {
            k: parse_int(fields[0])? as usize,
            comms: parse_int(fields[1])?,
            subgrads: parse_int(fields[2])?,
            model_time: fields[3]
                .parse::<f64>()
                .map_err(|e| format!("row {idx}: {e}"))?,
            primal_gap: parse_opt(fields[4]).map_err(|e| format!("row {idx}: {e}"))?,
            consensus: fields[5]
                .parse::<f64>()
                .map_err(|e| format!("row {idx}: {e}"))?,
            cert_margin: parse_opt(fields[6]).map_err(|e| format!("row {idx}: {e}"))?,
        });
    }
    Ok(record)
}
