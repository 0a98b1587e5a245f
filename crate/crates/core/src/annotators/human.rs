//! Import of human ground-truth annotations and reconciliation patches.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::AnnotatorError;
use crate::codebook::{normalize_record, parse_date, AnnotationRecord, Dimension, NormalizationWarning, Source};
use crate::corpus::LineError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanImport {
    pub records: Vec<AnnotationRecord>,
    pub rejected: Vec<LineError>,
    pub warnings: Vec<NormalizationWarning>,
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

fn parse_upd(raw: &str) -> Result<Option<chrono::NaiveDate>, String> {
    let s = raw.trim();
    if s.eq_ignore_ascii_case("NA") {
        return Ok(None);
    }
    parse_date(s).map(Some).ok_or_else(|| format!("invalid upd `{s}`"))
}

/// Builds a record from string-valued cells; `None` cells count as missing.
fn row_to_record(cells: &BTreeMap<String, String>) -> Result<AnnotationRecord, String> {
    let get = |name: &str| -> Result<&str, String> {
        cells
            .get(name)
            .map(String::as_str)
            .filter(|v| !v.trim().is_empty())
            .ok_or_else(|| format!("missing field `{name}`"))
    };
    let doc_id = get("doc_id")?.trim().to_string();
    let coder = get("coder_id")?.trim().to_string();
    let mut record = AnnotationRecord::empty(&doc_id, Source::Human, &coder);
    for dim in Dimension::BOOLEAN {
        let raw = get(dim.code())?;
        let v = parse_bool(raw).ok_or_else(|| format!("field `{dim}` is not boolean: `{raw}`"))?;
        record.set_flag(dim, v);
    }
    record.upd = parse_upd(get("upd")?)?;
    Ok(record)
}

fn json_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        _ => String::new(),
    }
}

fn read_rows(path: &Path) -> Result<Vec<Result<BTreeMap<String, String>, String>>, AnnotatorError> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let items: Vec<Value> = serde_json::from_str(&fs::read_to_string(path)?)?;
        return Ok(items
            .into_iter()
            .map(|item| match item {
                Value::Object(map) => Ok(map.iter().map(|(k, v)| (k.clone(), json_cell(v))).collect()),
                _ => Err("row is not an object".to_string()),
            })
            .collect());
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    Ok(reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            Ok(headers.iter().cloned().zip(row.iter().map(str::to_string)).collect())
        })
        .collect())
}

/// Imports one row per (doc_id, coder_id) from CSV (or a JSON array when the
/// file ends in `.json`).
pub fn import_human(path: &Path) -> Result<HumanImport, AnnotatorError> {
    let rows = read_rows(path)?;
    let mut out = HumanImport::default();
    let mut seen = HashSet::new();
    for (i, row) in rows.into_iter().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = match row.and_then(|cells| row_to_record(&cells)) {
            Ok(r) => r,
            Err(message) => {
                out.rejected.push(LineError { line, message });
                continue;
            }
        };
        if !seen.insert((record.doc_id.clone(), record.backend_id.clone())) {
            return Err(AnnotatorError::DuplicateAnnotation { doc_id: record.doc_id, coder_id: record.backend_id });
        }
        let (normalized, warnings) = normalize_record(&record);
        out.warnings.extend(warnings);
        out.records.push(normalized);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub doc_id: String,
    pub coder_id: String,
    pub field: String,
    pub value: String,
}

/// Applies explicit ground-truth corrections, then re-normalizes.
pub fn apply_patches(
    records: &mut [AnnotationRecord],
    patch_path: &Path,
) -> Result<Vec<NormalizationWarning>, AnnotatorError> {
    let mut reader = csv::Reader::from_path(patch_path)?;
    let patches: Vec<Patch> = reader.deserialize().collect::<Result<_, _>>()?;
    let mut warnings = Vec::new();
    for patch in patches {
        let record =
            records.iter_mut().find(|r| r.doc_id == patch.doc_id && r.backend_id == patch.coder_id).ok_or_else(
                || AnnotatorError::InvalidPatch(format!("no record for ({}, {})", patch.doc_id, patch.coder_id)),
            )?;
        let dim: Dimension = patch.field.parse().map_err(AnnotatorError::InvalidPatch)?;
        match dim {
            Dimension::Upd => {
                record.upd = parse_upd(&patch.value).map_err(AnnotatorError::InvalidPatch)?;
            }
            _ => {
                let v = parse_bool(&patch.value)
                    .ok_or_else(|| AnnotatorError::InvalidPatch(format!("`{}` is not boolean", patch.value)))?;
                record.set_flag(dim, v);
            }
        }
        let (normalized, w) = normalize_record(record);
        *record = normalized;
        warnings.extend(w);
    }
    Ok(warnings)
}
