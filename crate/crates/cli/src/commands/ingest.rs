//! `ingest`: raw CSV in, cleaned corpus and row-error report out.

use serde_json::json;

use tenor::corpus::{
    dedupe, load_corpus, normalize_record, row_accounting, write_corpus, RowError, RowErrorKind,
};

use super::{cleaned_path, corpus_error, ensure_output_dir, write_json};
use crate::{CmdError, CmdResult, Context};

pub fn run(ctx: &Context) -> CmdResult {
    let config = &ctx.config;
    let input = config
        .input_csv
        .as_ref()
        .ok_or_else(|| CmdError::Usage("no input corpus: set `input_csv` or --input".into()))?;

    let (records, mut errors) = load_corpus(input, &config.columns).map_err(corpus_error)?;
    let rows_in = row_accounting(&records, &errors);

    // file row numbers of accepted records: the rows not taken by errors
    let mut error_rows: std::collections::HashSet<u64> =
        errors.iter().map(|e| e.row_number).collect();
    let mut row_of_record = Vec::with_capacity(records.len());
    let mut row = 1u64;
    for _ in &records {
        while error_rows.contains(&row) {
            row += 1;
        }
        row_of_record.push(row);
        row += 1;
    }

    // normalization can empty an abstract that only held stripped characters
    let mut normalized = Vec::with_capacity(records.len());
    for (mut record, file_row) in records.into_iter().zip(row_of_record) {
        normalize_record(&mut record);
        if record.abstract_text.is_empty() {
            errors.push(RowError {
                row_number: file_row,
                reason: RowErrorKind::EmptyAbstract,
                detail: "abstract is empty after normalization".into(),
            });
            error_rows.insert(file_row);
        } else {
            normalized.push(record);
        }
    }
    errors.sort_by_key(|e| e.row_number);
    let accepted = normalized.len();

    let (kept, dropped) = dedupe(normalized);

    ensure_output_dir(config)?;
    let cleaned = cleaned_path(config);
    write_corpus(&kept, &cleaned).map_err(corpus_error)?;
    let errors_path = config.output_dir.join("row_errors.json");
    write_json(&errors_path, &serde_json::to_value(&errors).expect("row errors serialize"))?;

    log::info!(
        "ingest: {rows_in} rows in, {accepted} accepted, {} duplicates dropped, {} rejected",
        dropped.len(),
        errors.len()
    );
    if ctx.strict && !errors.is_empty() {
        return Err(CmdError::Runtime(format!(
            "{} rows rejected (strict mode); see {}",
            errors.len(),
            errors_path.display()
        )));
    }

    Ok(json!({
        "command": "ingest",
        "rows_in": rows_in,
        "accepted": accepted,
        "deduped": dropped.len(),
        "errors": errors.len(),
        "kept": kept.len(),
        "cleaned_csv": cleaned,
        "row_errors_json": errors_path,
    }))
}
