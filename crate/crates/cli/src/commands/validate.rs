//! `validate`: compare scored labels against the external LLM's ratings.

use serde_json::json;

use tenor::llm::{cross_validate, LlmError};

use super::{build_session, ensure_output_dir, load_scored, scored_path, sentiment_template, write_json};
use crate::{CmdError, CmdResult, Context};

fn llm_error(e: LlmError) -> CmdError {
    match e {
        LlmError::SampleTooLarge { .. } | LlmError::PromptPlaceholder { .. } => {
            CmdError::Usage(e.to_string())
        }
        other => CmdError::Runtime(other.to_string()),
    }
}

pub fn run(ctx: &Context, sample_size: usize) -> CmdResult {
    let config = &ctx.config;
    let (records, results) = load_scored(&scored_path(config))?;
    let template = sentiment_template(config)?;
    let session = build_session(config)?;

    let outcome = cross_validate(
        &records,
        &results,
        &session,
        &template,
        sample_size,
        config.seed,
    )
    .map_err(llm_error)?;

    ensure_output_dir(config)?;
    let output = config.output_dir.join("agreement.json");
    write_json(
        &output,
        &json!({
            "model": config.llm.model,
            "prompt": template,
            "sample_size": sample_size,
            "seed": config.seed,
            "stats": outcome.stats,
            "parse_failures": outcome.parse_failures,
            "served_from_cache": outcome.served_from_cache,
        }),
    )?;

    log::info!(
        "validate: n={}, exact match {:.3}, mae {:.3}, {} served from cache, {} live calls",
        outcome.stats.n,
        outcome.stats.exact_match_rate,
        outcome.stats.mean_absolute_star_error,
        outcome.served_from_cache,
        session.live_calls()
    );
    if ctx.strict && !outcome.parse_failures.is_empty() {
        return Err(CmdError::Runtime(format!(
            "{} responses failed to parse (strict mode)",
            outcome.parse_failures.len()
        )));
    }

    Ok(json!({
        "command": "validate",
        "n": outcome.stats.n,
        "exact_match_rate": outcome.stats.exact_match_rate,
        "mean_absolute_star_error": outcome.stats.mean_absolute_star_error,
        "parse_failures": outcome.parse_failures.len(),
        "served_from_cache": outcome.served_from_cache,
        "live_calls": session.live_calls(),
        "output": output,
    }))
}
