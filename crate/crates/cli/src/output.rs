use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Magnitudes below this are rounding noise and written as zero.
pub const FLUSH_BELOW: f64 = 1e-15;

/// Rounds to 12 significant digits.
pub fn quantize(v: f64) -> f64 {
    if v.abs() < FLUSH_BELOW {
        return 0.0;
    }
    if !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

pub fn quantize_table(t: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    t.iter()
        .map(|a| a.iter().map(|b| b.iter().map(|&v| quantize(v)).collect()).collect())
        .collect()
}

/// Quantizes every float in a JSON tree.
pub fn quantize_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let q = quantize(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(q).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(quantize_json),
        Value::Object(map) => map.values_mut().for_each(quantize_json),
        _ => {}
    }
}

/// `(path, scalar)` pairs such as `("table[0][1][0]", "0.5")`.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), item, out);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, item, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Display form of an optional cell.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| quantize(x).to_string()).unwrap_or_default()
}
