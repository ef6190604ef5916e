use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::args::Format;

/// Destination for command output: `--out` file or stdout.
pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `rows` as CSV (`header` plus `csv` of each row) or a JSON array.
pub fn table<T: Serialize>(
    w: &mut dyn Write,
    format: Format,
    header: &str,
    rows: &[T],
    csv: impl Fn(&T) -> String,
) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "{header}")?;
            for row in rows {
                writeln!(w, "{}", csv(row))?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a single record as pretty JSON or as a two-line CSV.
pub fn record<T: Serialize>(w: &mut dyn Write, format: Format, value: &T) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let json = serde_json::to_value(value)?;
            let obj = json.as_object().context("record is not a JSON object")?;
            let mut keys = Vec::new();
            let mut vals = Vec::new();
            flatten("", obj, &mut keys, &mut vals);
            writeln!(w, "{}", keys.join(","))?;
            writeln!(w, "{}", vals.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn flatten(
    prefix: &str,
    obj: &serde_json::Map<String, serde_json::Value>,
    keys: &mut Vec<String>,
    vals: &mut Vec<String>,
) {
    for (k, v) in obj {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            serde_json::Value::Object(inner) => flatten(&key, inner, keys, vals),
            serde_json::Value::Null => {
                keys.push(key);
                vals.push(String::new());
            }
            serde_json::Value::String(s) => {
                keys.push(key);
                vals.push(s.clone());
            }
            other => {
                keys.push(key);
                vals.push(other.to_string());
            }
        }
    }
}
