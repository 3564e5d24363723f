//! Tab-separated paired p-value tables.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use replfdr_core::model::{PairedPValueSet, P_CLAMP};

use crate::error::{AppError, AppResult};

pub const HEADER: [&str; 3] = ["feature_id", "p1", "p2"];

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub data: PairedPValueSet,
    pub warnings: Vec<String>,
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v}").expect("writing to a String cannot fail");
    s
}

pub fn ingest_path(path: &Path) -> AppResult<Ingested> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    ingest_reader(file, &path.display().to_string())
}

/// Parses a `feature_id\tp1\tp2` table. `source` names the input in messages.
pub fn ingest_reader(reader: impl Read, source: &str) -> AppResult<Ingested> {
    let parse_err = |line: usize, message: String| AppError::Parse { path: source.to_string(), line, message };
    let mut ids = Vec::new();
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    let mut warnings = Vec::new();
    let mut out_of_range = Vec::new();
    let mut seen = HashSet::new();
    let mut header_seen = false;

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !header_seen {
            let header: Vec<&str> = fields.iter().map(|f| f.trim()).collect();
            if header != HEADER {
                return Err(parse_err(lineno, format!("expected header `{}`", HEADER.join("\\t"))));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != 3 {
            return Err(parse_err(lineno, format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(parse_err(lineno, "empty feature_id".into()));
        }
        let mut row = [0.0; 2];
        for (slot, (name, text)) in row.iter_mut().zip([("p1", fields[1]), ("p2", fields[2])]) {
            let text = text.trim();
            let v: f64 = text.parse().map_err(|_| parse_err(lineno, format!("{name} = `{text}` is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                out_of_range.push(lineno);
            } else if v < P_CLAMP || v > 1.0 - P_CLAMP {
                warnings.push(format!("line {lineno}: {name} = {text} clamped into [{P_CLAMP:e}, 1 - {P_CLAMP:e}]"));
            }
            *slot = v;
        }
        if !seen.insert(id.to_string()) {
            warnings.push(format!("line {lineno}: duplicate feature_id `{id}`"));
        }
        ids.push(id.to_string());
        p1.push(row[0]);
        p2.push(row[1]);
    }
    if !header_seen {
        return Err(parse_err(1, "missing header".into()));
    }
    if !out_of_range.is_empty() {
        out_of_range.dedup();
        return Err(AppError::OutOfRange { path: source.to_string(), lines: out_of_range });
    }
    if ids.is_empty() {
        return Err(AppError::Parse { path: source.to_string(), line: 1, message: "no data rows".into() });
    }
    let data = PairedPValueSet::new(ids, p1, p2)?;
    Ok(Ingested { data, warnings })
}

pub fn dataset_to_tsv(data: &PairedPValueSet) -> String {
    let mut out = HEADER.join("\t");
    out.push('\n');
    for ((id, &a), &b) in data.feature_ids().iter().zip(data.p1()).zip(data.p2()) {
        out.push_str(&format!("{id}\t{}\t{}\n", format_real(a), format_real(b)));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}
