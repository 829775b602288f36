//! `score`: cleaned corpus in, scored CSV out.

use std::path::Path;

use serde_json::json;

use tenor::corpus::{load_corpus, write_scored_corpus, ColumnMap};
use tenor::scoring::score_corpus;

use super::{build_backend, cleaned_path, corpus_error, ensure_output_dir, scored_path, write_json};
use crate::{CmdError, CmdResult, Context};

pub fn run(ctx: &Context, input: Option<&Path>) -> CmdResult {
    let config = &ctx.config;
    let input = input
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cleaned_path(config));
    let backend = build_backend(config)?;

    let (records, errors) = load_corpus(&input, &ColumnMap::default()).map_err(corpus_error)?;
    if !errors.is_empty() {
        return Err(CmdError::Runtime(format!(
            "{} invalid rows in {}; run ingest first",
            errors.len(),
            input.display()
        )));
    }

    let run = score_corpus(&records, backend.as_ref(), ctx.jobs);

    // keep records aligned with the results that succeeded
    let succeeded: std::collections::HashSet<u64> =
        run.results.iter().map(|r| r.record_id).collect();
    let scored_records: Vec<_> = records
        .iter()
        .filter(|r| succeeded.contains(&r.record_id))
        .cloned()
        .collect();

    ensure_output_dir(config)?;
    let output = scored_path(config);
    write_scored_corpus(&scored_records, &run.results, &output).map_err(corpus_error)?;

    let mut failures_path = None;
    if !run.failures.is_empty() {
        let path = config.output_dir.join("score_failures.json");
        write_json(
            &path,
            &serde_json::to_value(&run.failures).expect("failures serialize"),
        )?;
        failures_path = Some(path);
    }

    log::info!(
        "score: {} records scored with {}, {} failed",
        run.results.len(),
        backend.name(),
        run.failures.len()
    );
    if ctx.strict && !run.failures.is_empty() {
        return Err(CmdError::Runtime(format!(
            "{} records failed to score (strict mode)",
            run.failures.len()
        )));
    }

    Ok(json!({
        "command": "score",
        "records": records.len(),
        "scored": run.results.len(),
        "failed": run.failures.len(),
        "backend": backend.name(),
        "scored_csv": output,
        "failures_json": failures_path,
    }))
}
