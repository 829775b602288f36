//! Corpus ingestion: loading, validation, normalization, deduplication and
//! persistence of abstract records in CSV form.
//!
//! A corpus is a UTF-8, comma-delimited CSV with a header row. The four
//! logical columns are `journal`, `title`, `year` and `abstract`; physical
//! column names are remapped through [`ColumnMap`]. Scored output appends
//! exactly two columns, `sentiment_score` and `sentiment_label`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::scoring::{SentimentResult, Star};

pub const MIN_YEAR: i32 = 1900;
pub const MAX_YEAR: i32 = 2100;

/// One corpus row: a scientific abstract with its publication metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractRecord {
    /// Row index over accepted rows, assigned at load starting at 0.
    pub record_id: u64,
    pub journal: String,
    pub title: String,
    pub year: i32,
    pub abstract_text: String,
}

/// Why a CSV data row was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowErrorKind {
    MissingField,
    BadYear,
    EmptyAbstract,
    EncodingError,
}

impl fmt::Display for RowErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RowErrorKind::MissingField => "missing_field",
            RowErrorKind::BadYear => "bad_year",
            RowErrorKind::EmptyAbstract => "empty_abstract",
            RowErrorKind::EncodingError => "encoding_error",
        };
        f.write_str(s)
    }
}

/// A rejected row. `row_number` is the 1-based data row, header excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub row_number: u64,
    pub reason: RowErrorKind,
    pub detail: String,
}

/// Fatal corpus I/O failures. Per-row problems are collected as [`RowError`]s
/// instead.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header is not valid UTF-8")]
    HeaderEncoding,
    #[error("column {logical:?} (mapped to {physical:?}) not found in header")]
    MissingColumn { logical: String, physical: String },
    #[error("scored csv row {row}: {detail}")]
    BadScoredRow { row: u64, detail: String },
    #[error("records and results differ in length or record ids")]
    Misaligned,
}

/// Maps the logical column names to the physical CSV header names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub journal: String,
    pub title: String,
    pub year: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            journal: "journal".into(),
            title: "title".into(),
            year: "year".into(),
            abstract_text: "abstract".into(),
        }
    }
}

impl ColumnMap {
    /// Resolve the mapped names against a header row, yielding field indices.
    fn resolve(&self, header: &csv::StringRecord) -> Result<ColumnIndices, CorpusError> {
        let find = |logical: &str, physical: &str| -> Result<usize, CorpusError> {
            header
                .iter()
                .position(|h| h == physical)
                .ok_or_else(|| CorpusError::MissingColumn {
                    logical: logical.into(),
                    physical: physical.into(),
                })
        };
        Ok(ColumnIndices {
            journal: find("journal", &self.journal)?,
            title: find("title", &self.title)?,
            year: find("year", &self.year)?,
            abstract_text: find("abstract", &self.abstract_text)?,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct ColumnIndices {
    journal: usize,
    title: usize,
    year: usize,
    abstract_text: usize,
}

/// Load a corpus CSV. Every data row becomes exactly one [`AbstractRecord`]
/// or one [`RowError`]; file order is preserved and `record_id` runs
/// sequentially over the accepted rows.
pub fn load_corpus(
    path: &Path,
    columns: &ColumnMap,
) -> Result<(Vec<AbstractRecord>, Vec<RowError>), CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));

    let header = reader.byte_headers()?.clone();
    let header =
        csv::StringRecord::from_byte_record(header).map_err(|_| CorpusError::HeaderEncoding)?;
    let idx = columns.resolve(&header)?;

    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut row_number: u64 = 0;
    let mut next_id: u64 = 0;

    for raw in reader.byte_records() {
        row_number += 1;
        let raw = match raw {
            Ok(r) => r,
            Err(e) => {
                errors.push(RowError {
                    row_number,
                    reason: RowErrorKind::MissingField,
                    detail: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        match parse_row(&raw, idx, row_number) {
            Ok(mut record) => {
                record.record_id = next_id;
                next_id += 1;
                records.push(record);
            }
            Err(e) => errors.push(e),
        }
    }

    Ok((records, errors))
}

fn parse_row(
    raw: &csv::ByteRecord,
    idx: ColumnIndices,
    row_number: u64,
) -> Result<AbstractRecord, RowError> {
    let field = |i: usize, name: &str| -> Result<String, RowError> {
        let bytes = raw.get(i).ok_or_else(|| RowError {
            row_number,
            reason: RowErrorKind::MissingField,
            detail: format!("column {name} absent"),
        })?;
        String::from_utf8(bytes.to_vec()).map_err(|_| RowError {
            row_number,
            reason: RowErrorKind::EncodingError,
            detail: format!("column {name} is not valid UTF-8"),
        })
    };

    let journal = field(idx.journal, "journal")?;
    let title = field(idx.title, "title")?;
    let year_raw = field(idx.year, "year")?;
    let abstract_text = field(idx.abstract_text, "abstract")?;

    if journal.trim().is_empty() {
        return Err(RowError {
            row_number,
            reason: RowErrorKind::MissingField,
            detail: "journal is empty".into(),
        });
    }
    if title.trim().is_empty() {
        return Err(RowError {
            row_number,
            reason: RowErrorKind::MissingField,
            detail: "title is empty".into(),
        });
    }

    let year: i32 = year_raw.trim().parse().map_err(|_| RowError {
        row_number,
        reason: RowErrorKind::BadYear,
        detail: format!("year {year_raw:?} is not an integer"),
    })?;
    if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
        return Err(RowError {
            row_number,
            reason: RowErrorKind::BadYear,
            detail: format!("year {year} outside [{MIN_YEAR}, {MAX_YEAR}]"),
        });
    }

    if abstract_text.chars().all(char::is_whitespace) {
        return Err(RowError {
            row_number,
            reason: RowErrorKind::EmptyAbstract,
            detail: "abstract has no non-whitespace characters".into(),
        });
    }

    Ok(AbstractRecord {
        record_id: 0, // assigned by the caller
        journal,
        title,
        year,
        abstract_text,
    })
}

/// Zero-width and bidi format characters stripped by [`normalize_text`].
/// Whitespace-class characters are handled by the collapse step instead.
fn is_format_char(c: char) -> bool {
    matches!(c,
        '\u{00AD}'                  // soft hyphen
        | '\u{200B}'..='\u{200F}'   // zero-width space/joiners, bidi marks
        | '\u{202A}'..='\u{202E}'   // bidi embedding controls
        | '\u{2060}'..='\u{2064}'   // word joiner, invisible operators
        | '\u{FEFF}'                // byte-order mark
    )
}

/// Normalize raw text: NFKC composition, control and zero-width format
/// characters stripped, whitespace runs collapsed to single spaces, ends
/// trimmed. Case is preserved.
pub fn normalize_text(raw: &str) -> String {
    let cleaned: String = raw
        .nfkc()
        .filter(|&c| !(c.is_control() && !c.is_whitespace()) && !is_format_char(c))
        .collect();
    let mut out = String::with_capacity(cleaned.len());
    for word in cleaned.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Normalize every text field of a record in place.
pub fn normalize_record(record: &mut AbstractRecord) {
    record.journal = normalize_text(&record.journal);
    record.title = normalize_text(&record.title);
    record.abstract_text = normalize_text(&record.abstract_text);
}

/// The deduplication key: normalized, case-folded abstract text.
pub fn dedupe_key(abstract_text: &str) -> String {
    normalize_text(abstract_text).to_lowercase()
}

/// Split records into first occurrences and duplicates, keyed by the
/// normalized case-folded abstract. Input order is preserved on both sides.
pub fn dedupe(records: Vec<AbstractRecord>) -> (Vec<AbstractRecord>, Vec<AbstractRecord>) {
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = Vec::new();
    for record in records {
        if seen.insert(dedupe_key(&record.abstract_text)) {
            kept.push(record);
        } else {
            dropped.push(record);
        }
    }
    (kept, dropped)
}

const BASE_HEADER: [&str; 4] = ["journal", "title", "year", "abstract"];

/// Write a cleaned corpus using the logical column names, so the output can
/// be reloaded with a default [`ColumnMap`].
pub fn write_corpus(records: &[AbstractRecord], path: &Path) -> Result<(), CorpusError> {
    let mut writer = open_writer(path)?;
    writer.write_record(BASE_HEADER)?;
    for r in records {
        writer.write_record([
            r.journal.as_str(),
            r.title.as_str(),
            &r.year.to_string(),
            r.abstract_text.as_str(),
        ])?;
    }
    writer.flush().map_err(|source| CorpusError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Write records with their sentiment columns. Records and results must be
/// aligned by `record_id`. Scores are serialized with six decimal places.
pub fn write_scored_corpus(
    records: &[AbstractRecord],
    results: &[SentimentResult],
    path: &Path,
) -> Result<(), CorpusError> {
    if records.len() != results.len()
        || records
            .iter()
            .zip(results)
            .any(|(rec, res)| rec.record_id != res.record_id)
    {
        return Err(CorpusError::Misaligned);
    }
    let mut writer = open_writer(path)?;
    writer.write_record([
        BASE_HEADER[0],
        BASE_HEADER[1],
        BASE_HEADER[2],
        BASE_HEADER[3],
        "sentiment_score",
        "sentiment_label",
    ])?;
    for (rec, res) in records.iter().zip(results) {
        writer.write_record([
            rec.journal.as_str(),
            rec.title.as_str(),
            &rec.year.to_string(),
            rec.abstract_text.as_str(),
            &format!("{:.6}", res.normalized_score),
            &res.label.to_string(),
        ])?;
    }
    writer.flush().map_err(|source| CorpusError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// A record joined with its persisted sentiment columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub record: AbstractRecord,
    pub score: f64,
    pub label: Star,
}

/// Load a scored corpus written by [`write_scored_corpus`]. A scored file is
/// pipeline output, not raw input, so any defective row is fatal rather than
/// collected.
pub fn load_scored_corpus(path: &Path) -> Result<Vec<ScoredRow>, CorpusError> {
    let (records, errors) = load_corpus(path, &ColumnMap::default())?;
    if let Some(e) = errors.first() {
        return Err(CorpusError::BadScoredRow {
            row: e.row_number,
            detail: format!("{}: {}", e.reason, e.detail),
        });
    }

    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let header = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize, CorpusError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CorpusError::MissingColumn {
                logical: name.into(),
                physical: name.into(),
            })
    };
    let score_idx = find("sentiment_score")?;
    let label_idx = find("sentiment_label")?;

    let mut rows = Vec::with_capacity(records.len());
    for (record, raw) in records.into_iter().zip(reader.records()) {
        let raw = raw?;
        let row = record.record_id + 1;
        let score: f64 = raw
            .get(score_idx)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CorpusError::BadScoredRow {
                row,
                detail: "bad sentiment_score".into(),
            })?;
        if !(0.0..=1.0).contains(&score) {
            return Err(CorpusError::BadScoredRow {
                row,
                detail: format!("sentiment_score {score} outside [0, 1]"),
            });
        }
        let label: u8 = raw
            .get(label_idx)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CorpusError::BadScoredRow {
                row,
                detail: "bad sentiment_label".into(),
            })?;
        let label = Star::new(label).map_err(|_| CorpusError::BadScoredRow {
            row,
            detail: format!("sentiment_label {label} outside [1, 5]"),
        })?;
        rows.push(ScoredRow {
            record,
            score,
            label,
        });
    }
    Ok(rows)
}

/// Accepted plus rejected must cover every data row of the file.
pub fn row_accounting(records: &[AbstractRecord], errors: &[RowError]) -> u64 {
    records.len() as u64 + errors.len() as u64
}

fn open_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CorpusError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| CorpusError::Write {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    let file = File::create(path).map_err(|source| CorpusError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Group duplicate keys without going through `dedupe`, for audit summaries.
pub fn duplicate_groups(records: &[AbstractRecord]) -> HashMap<String, Vec<u64>> {
    let mut groups: HashMap<String, Vec<u64>> = HashMap::new();
    for r in records {
        groups
            .entry(dedupe_key(&r.abstract_text))
            .or_default()
            .push(r.record_id);
    }
    groups.retain(|_, ids| ids.len() > 1);
    groups
}
