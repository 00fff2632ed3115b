//! Conversion of exported Hatebase API result pages into the dictionary CSV.
//!
//! Each page is a JSON object with a `result` array; each result carries
//! `term`, `average_offensiveness` (number or null) and `is_unambiguous`
//! (boolean, or the strings "true"/"false"). Other fields are ignored.

use serde_json::Value;

use super::DICTIONARY_HEADER;
use crate::error::{Error, Result};

pub const DEFAULT_NULL_OFFENSIVENESS: u8 = 50;

/// What to do with a result whose `average_offensiveness` is null or absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullOffensiveness {
    Default(u8),
    Drop,
}

impl Default for NullOffensiveness {
    fn default() -> Self {
        NullOffensiveness::Default(DEFAULT_NULL_OFFENSIVENESS)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    /// The dictionary CSV, header included.
    pub csv: String,
    pub rows: usize,
    pub skipped_missing_term: usize,
    pub null_defaulted: usize,
    pub null_dropped: usize,
}

fn as_bool(v: Option<&Value>) -> bool {
    match v {
        Some(Value::Bool(b)) => *b,
        Some(Value::String(s)) => s.eq_ignore_ascii_case("true") || s == "1",
        Some(Value::Number(n)) => n.as_f64().is_some_and(|x| x != 0.0),
        _ => false,
    }
}

/// Converts API-shaped pages into dictionary CSV rows, lowercasing terms.
///
/// Fractional offensiveness values are rounded to the nearest integer and
/// clamped into [0, 100].
pub fn ingest_hatebase_json<S: AsRef<str>>(pages: &[S], nulls: NullOffensiveness) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer.write_record(DICTIONARY_HEADER.split(','))?;

    for (page_index, page) in pages.iter().enumerate() {
        let bad = |reason: String| Error::HatebasePage {
            page: page_index,
            reason,
        };
        let doc: Value = serde_json::from_str(page.as_ref()).map_err(|e| bad(e.to_string()))?;
        let results = doc
            .get("result")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `result` array".into()))?;

        for item in results {
            let Some(term) = item.get("term").and_then(Value::as_str) else {
                report.skipped_missing_term += 1;
                continue;
            };
            let term = term.trim().to_lowercase();
            if term.is_empty() {
                report.skipped_missing_term += 1;
                continue;
            }
            let offensiveness = match item.get("average_offensiveness").and_then(Value::as_f64) {
                Some(v) => v.round().clamp(0.0, 100.0) as u8,
                None => match nulls {
                    NullOffensiveness::Default(v) => {
                        report.null_defaulted += 1;
                        v
                    }
                    NullOffensiveness::Drop => {
                        report.null_dropped += 1;
                        continue;
                    }
                },
            };
            let unambiguous = as_bool(item.get("is_unambiguous"));
            writer.write_record([term, offensiveness.to_string(), unambiguous.to_string()])?;
            report.rows += 1;
        }
    }

    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    report.csv = String::from_utf8(bytes).expect("csv writer emits utf-8");
    Ok(report)
}
