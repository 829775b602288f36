//! `explain`: attribution HTML and JSON for one record of the cleaned corpus.

use serde_json::json;

use tenor::corpus::{load_corpus, ColumnMap};
use tenor::explain::{
    attribute_exact, attribute_sampled, render_attribution_html, write_attribution_json,
    ExplainError, ExplainedQuantity,
};

use super::{build_backend, cleaned_path, corpus_error, ensure_output_dir};
use crate::{CmdError, CmdResult, Context};

fn explain_error(e: ExplainError) -> CmdError {
    match e {
        // asking for exact mode on an over-long abstract is a usage problem
        ExplainError::TooManyWords { .. } | ExplainError::ZeroSamples => {
            CmdError::Usage(e.to_string())
        }
        other => CmdError::Runtime(other.to_string()),
    }
}

pub fn run(
    ctx: &Context,
    record_id: u64,
    exact: bool,
    samples: Option<u64>,
    quantity: ExplainedQuantity,
) -> CmdResult {
    let config = &ctx.config;
    let input = cleaned_path(config);
    let (records, errors) = load_corpus(&input, &ColumnMap::default()).map_err(corpus_error)?;
    if !errors.is_empty() {
        return Err(CmdError::Runtime(format!(
            "{} invalid rows in {}; run ingest first",
            errors.len(),
            input.display()
        )));
    }
    let record = records
        .iter()
        .find(|r| r.record_id == record_id)
        .ok_or_else(|| {
            CmdError::Usage(format!(
                "record {record_id} not found; the corpus has {} records",
                records.len()
            ))
        })?;

    let backend = build_backend(config)?;
    let report = if exact {
        attribute_exact(record_id, &record.abstract_text, backend.as_ref(), quantity)
            .map_err(explain_error)?
    } else {
        let samples = samples.expect("clap enforces --exact or --samples");
        // permutation evaluation fans out on the surrounding worker pool;
        // results are identical for any worker count
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.jobs)
            .build()
            .map_err(|e| CmdError::Runtime(format!("worker pool: {e}")))?;
        pool.install(|| {
            attribute_sampled(
                record_id,
                &record.abstract_text,
                backend.as_ref(),
                quantity,
                samples,
                config.seed,
            )
        })
        .map_err(explain_error)?
    };

    ensure_output_dir(config)?;
    let html_path = config.output_dir.join(format!("explain_{record_id}.html"));
    let json_path = config.output_dir.join(format!("explain_{record_id}.json"));
    render_attribution_html(&report, &record.abstract_text, &html_path)
        .map_err(explain_error)?;
    write_attribution_json(&report, &json_path).map_err(explain_error)?;

    log::info!(
        "explain: record {record_id}, {} words, method {:?}",
        report.attributions.len(),
        report.method
    );

    Ok(json!({
        "command": "explain",
        "record_id": record_id,
        "explained_quantity": report.explained_quantity,
        "method": report.method,
        "sample_count": report.sample_count,
        "base_value": report.base_value,
        "model_output": report.model_output,
        "additivity_gap": report.additivity_gap,
        "html": html_path,
        "json": json_path,
    }))
}
