//! Pipeline subcommands. Each reads its stage input from the output
//! directory, writes its outputs there, and returns a JSON summary for
//! stdout. No command mutates its input files.

pub mod analyze;
pub mod explain;
pub mod ingest;
pub mod score;
pub mod validate;

use std::path::{Path, PathBuf};

use tenor::corpus::{load_scored_corpus, AbstractRecord, CorpusError};
use tenor::llm::{
    HttpLlmClient, LlmSession, OfflineClient, PromptKind, PromptTemplate, ResponseCache,
    RetryPolicy,
};
use tenor::scoring::{
    BackendSpec, LexiconBackend, ScoringBackend, SentimentResult, TransformerBackend,
};

use crate::config::{LlmMode, PipelineConfig, LLM_TOKEN_ENV, TRANSFORMER_TOKEN_ENV};
use crate::CmdError;

pub fn cleaned_path(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("cleaned.csv")
}

pub fn scored_path(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("scored.csv")
}

pub fn ensure_output_dir(config: &PipelineConfig) -> Result<(), CmdError> {
    std::fs::create_dir_all(&config.output_dir).map_err(|e| {
        CmdError::Runtime(format!(
            "cannot create output dir {}: {e}",
            config.output_dir.display()
        ))
    })
}

/// Map corpus failures: a wrong column mapping is a configuration problem,
/// everything else is a runtime failure.
pub fn corpus_error(e: CorpusError) -> CmdError {
    match e {
        CorpusError::MissingColumn { .. } => CmdError::Usage(e.to_string()),
        other => CmdError::Runtime(other.to_string()),
    }
}

/// Instantiate the scoring backend named by the config.
pub fn build_backend(config: &PipelineConfig) -> Result<Box<dyn ScoringBackend>, CmdError> {
    let spec = config
        .backend
        .as_deref()
        .ok_or_else(|| CmdError::Usage("no backend configured: set `backend` or --backend".into()))?;
    let spec: BackendSpec = spec
        .parse()
        .map_err(|e: tenor::scoring::ScoringError| CmdError::Usage(e.to_string()))?;
    match spec {
        BackendSpec::Lexicon(path) => {
            let backend = LexiconBackend::from_file(&path, config.chunk_budget)
                .map_err(|e| CmdError::Usage(e.to_string()))?;
            Ok(Box::new(backend))
        }
        BackendSpec::Transformer(model) => {
            let token = std::env::var(TRANSFORMER_TOKEN_ENV).ok();
            let backend = TransformerBackend::new(
                &model,
                &config.transformer.endpoint,
                token,
                config.chunk_budget,
            )
            .map_err(|e| CmdError::Runtime(e.to_string()))?;
            Ok(Box::new(backend))
        }
    }
}

/// Open the LLM session for the configured mode. Live mode requires the
/// token environment variable before anything touches the network.
pub fn build_session(config: &PipelineConfig) -> Result<LlmSession, CmdError> {
    let cache = ResponseCache::open(&config.llm.cache_path)
        .map_err(|e| CmdError::Runtime(e.to_string()))?;
    match config.llm.mode {
        LlmMode::Fixture => Ok(LlmSession::new(
            Box::new(OfflineClient),
            &config.llm.model,
            cache,
        )),
        LlmMode::Live => {
            let token = std::env::var(LLM_TOKEN_ENV).map_err(|_| {
                CmdError::Usage(format!(
                    "live llm mode requires the {LLM_TOKEN_ENV} environment variable"
                ))
            })?;
            let client =
                HttpLlmClient::new(&config.llm.endpoint, &token, RetryPolicy::default())
                    .map_err(|e| CmdError::Runtime(e.to_string()))?;
            Ok(LlmSession::new(
                Box::new(client),
                &config.llm.model,
                cache,
            ))
        }
    }
}

/// The sentiment validation prompt: config override or the built-in default.
pub fn sentiment_template(config: &PipelineConfig) -> Result<PromptTemplate, CmdError> {
    match &config.llm.sentiment_prompt {
        Some(text) => PromptTemplate::new(PromptKind::Sentiment1To5, text)
            .map_err(|e| CmdError::Usage(e.to_string())),
        None => Ok(PromptTemplate::default_for(PromptKind::Sentiment1To5)),
    }
}

/// Load a scored corpus into aligned record and result lists.
pub fn load_scored(
    path: &Path,
) -> Result<(Vec<AbstractRecord>, Vec<SentimentResult>), CmdError> {
    let rows = load_scored_corpus(path).map_err(corpus_error)?;
    let mut records = Vec::with_capacity(rows.len());
    let mut results = Vec::with_capacity(rows.len());
    for row in rows {
        results.push(SentimentResult::from_persisted(
            row.record.record_id,
            row.label,
            row.score,
        ));
        records.push(row.record);
    }
    Ok((records, results))
}

/// Write pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CmdError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::Runtime(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CmdError::Runtime(format!("write {}: {e}", path.display())))
}
