//! `analyze`: scored corpus in, three chart files and three CSV tables out.

use serde_json::json;

use tenor::analytics::{build_histogram_with_bins, journal_stats, render_charts, yearly_trend};

use super::{ensure_output_dir, load_scored, scored_path};
use crate::{CmdError, CmdResult, Context};

pub fn run(ctx: &Context) -> CmdResult {
    let config = &ctx.config;
    if config.chart_format != "svg" {
        return Err(CmdError::Usage(format!(
            "chart_format {:?} is not available; this build renders svg",
            config.chart_format
        )));
    }
    let trend_range = config.trend.ok_or_else(|| {
        CmdError::Usage(
            "the trend year range is required: set [trend] in the config or pass \
             --year-from and --year-to"
                .into(),
        )
    })?;

    let (records, results) = load_scored(&scored_path(config))?;

    let histogram = build_histogram_with_bins(&results, config.histogram_bins)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let trend = yearly_trend(
        &records,
        &results,
        trend_range.year_from,
        trend_range.year_to,
    )
    .map_err(|e| CmdError::Usage(e.to_string()))?;
    let stats = journal_stats(&records, &results, config.top_n_journals)
        .map_err(|e| CmdError::Usage(e.to_string()))?;

    ensure_output_dir(config)?;
    let paths = render_charts(&histogram, &trend, &stats, &config.output_dir)
        .map_err(|e| CmdError::Runtime(e.to_string()))?;

    log::info!(
        "analyze: {} records into {} bins, years {}..={}, top {} journals",
        results.len(),
        config.histogram_bins,
        trend_range.year_from,
        trend_range.year_to,
        config.top_n_journals
    );

    Ok(json!({
        "command": "analyze",
        "records": results.len(),
        "outputs": paths,
    }))
}
