//! Result files: per-record CSV or JSON plus an aggregate companion file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::plan::OutputFormat;
use super::trial::{Series, TrialRecord};
use crate::error::{JcmError, Result};

pub const CSV_COLUMNS: [&str; 10] = [
    "sweep_name",
    "sweep_value",
    "trial",
    "method",
    "nmse",
    "sr_bits",
    "sigma_hat2",
    "iterations",
    "runtime_s",
    "converged",
];

pub const AGGREGATE_COLUMNS: [&str; 12] = [
    "sweep_name",
    "sweep_value",
    "method",
    "count",
    "mean_nmse",
    "se_nmse",
    "mean_sr_bits",
    "se_sr_bits",
    "mean_iterations",
    "mean_runtime_s",
    "failures",
    "failure_rate",
];

/// Nine significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.8e}")
    }
}

fn json_float(x: f64) -> Value {
    match format_float(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
        Some(n) => Value::Number(n),
        None => Value::Null,
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> JcmError {
    JcmError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Per-(sweep_value, method) summary across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub method: Series,
    pub count: usize,
    pub mean_nmse: f64,
    pub se_nmse: f64,
    pub mean_sr_bits: f64,
    pub se_sr_bits: f64,
    pub mean_iterations: f64,
    pub mean_runtime_s: f64,
    pub failures: usize,
    pub failure_rate: f64,
}

/// Mean and standard error of the finite entries.
pub fn mean_and_se(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Group records by `(sweep_value, method)` in canonical order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(u64, Series), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        // Ordered key for finite values: flip bits so the integer order
        // matches the float order.
        let bits = r.sweep_value.to_bits();
        let key = if r.sweep_value.is_sign_negative() { !bits } else { bits | (1 << 63) };
        groups.entry((key, r.method)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rows| {
            let first = rows[0];
            let (mean_nmse, se_nmse) = mean_and_se(rows.iter().map(|r| r.nmse));
            let (mean_sr_bits, se_sr_bits) = mean_and_se(rows.iter().map(|r| r.sr_bits));
            let failures = rows.iter().filter(|r| !r.converged || !r.nmse.is_finite()).count();
            let n = rows.len();
            AggregateRow {
                sweep_name: first.sweep_name.clone(),
                sweep_value: first.sweep_value,
                method: first.method,
                count: n,
                mean_nmse,
                se_nmse,
                mean_sr_bits,
                se_sr_bits,
                mean_iterations: rows.iter().map(|r| r.iterations as f64).sum::<f64>() / n as f64,
                mean_runtime_s: rows.iter().map(|r| r.runtime_s).sum::<f64>() / n as f64,
                failures,
                failure_rate: failures as f64 / n as f64,
            }
        })
        .collect()
}

/// Companion path: `results.csv` -> `results_aggregate.csv`.
pub fn aggregate_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    let name = match path.extension() {
        Some(ext) => format!("{stem}_aggregate.{}", ext.to_string_lossy()),
        None => format!("{stem}_aggregate"),
    };
    path.with_file_name(name)
}

fn record_fields(r: &TrialRecord) -> [String; 10] {
    [
        r.sweep_name.clone(),
        format_float(r.sweep_value),
        r.trial.to_string(),
        r.method.label().to_string(),
        format_float(r.nmse),
        format_float(r.sr_bits),
        format_float(r.sigma_hat2),
        r.iterations.to_string(),
        format_float(r.runtime_s),
        r.converged.to_string(),
    ]
}

fn aggregate_fields(a: &AggregateRow) -> [String; 12] {
    [
        a.sweep_name.clone(),
        format_float(a.sweep_value),
        a.method.label().to_string(),
        a.count.to_string(),
        format_float(a.mean_nmse),
        format_float(a.se_nmse),
        format_float(a.mean_sr_bits),
        format_float(a.se_sr_bits),
        format_float(a.mean_iterations),
        format_float(a.mean_runtime_s),
        a.failures.to_string(),
        format_float(a.failure_rate),
    ]
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn write_json<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [String; N]>, numeric: &[bool; N]) -> Result<()> {
    let items: Vec<Value> = rows
        .map(|row| {
            let mut obj = Map::new();
            for ((key, cell), &is_num) in header.iter().zip(row).zip(numeric) {
                let v = if is_num {
                    json_float(cell.parse().unwrap_or(f64::NAN))
                } else if cell == "true" || cell == "false" {
                    Value::Bool(cell == "true")
                } else if let Ok(i) = cell.parse::<u64>() {
                    json!(i)
                } else {
                    Value::String(cell)
                };
                obj.insert(key.to_string(), v);
            }
            Value::Object(obj)
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&Value::Array(items)).map_err(|e| io_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Write the records and their aggregate companion; returns the companion
/// path.
pub fn emit_results(records: &[TrialRecord], format: OutputFormat, path: &Path) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(JcmError::InvalidConfig("no records to write".into()));
    }
    let agg = aggregate(records);
    let agg_path = aggregate_path(path);
    const REC_NUM: [bool; 10] = [false, true, false, false, true, true, true, false, true, false];
    const AGG_NUM: [bool; 12] = [false, true, false, false, true, true, true, true, true, true, false, true];
    match format {
        OutputFormat::Csv => {
            write_csv(path, CSV_COLUMNS, records.iter().map(record_fields))?;
            write_csv(&agg_path, AGGREGATE_COLUMNS, agg.iter().map(aggregate_fields))?;
        }
        OutputFormat::Json => {
            write_json(path, CSV_COLUMNS, records.iter().map(record_fields), &REC_NUM)?;
            write_json(&agg_path, AGGREGATE_COLUMNS, agg.iter().map(aggregate_fields), &AGG_NUM)?;
        }
    }
    Ok(agg_path)
}

/// Parse a record CSV written by [`emit_results`].
pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_error(path, e))?;
    let header = r.headers().map_err(|e| io_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(io_error(path, "unexpected header"));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| io_error(path, e))?;
        let bad = |field: &str| io_error(path, format!("bad {field} '{}'", row.get(CSV_COLUMNS.iter().position(|c| *c == field).unwrap()).unwrap_or("")));
        let float = |i: usize| row[i].parse::<f64>().map_err(|_| bad(CSV_COLUMNS[i]));
        let int = |i: usize| row[i].parse::<usize>().map_err(|_| bad(CSV_COLUMNS[i]));
        out.push(TrialRecord {
            sweep_name: row[0].to_string(),
            sweep_value: float(1)?,
            trial: int(2)?,
            method: row[3].parse().map_err(|_| bad("method"))?,
            nmse: float(4)?,
            sr_bits: float(5)?,
            sigma_hat2: float(6)?,
            iterations: int(7)?,
            runtime_s: float(8)?,
            converged: row[9].parse().map_err(|_| bad("converged"))?,
        });
    }
    Ok(out)
}
