//! Declarative pipeline configuration.
//!
//! A flat TOML file sets every parameter; command-line flags override the
//! file, and the file is optional when flags supply everything a command
//! needs. The config serializes back to the same values it was parsed from.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tenor::corpus::ColumnMap;

pub const DEFAULT_CHUNK_BUDGET: usize = 512;
pub const DEFAULT_HISTOGRAM_BINS: usize = 20;
pub const DEFAULT_TOP_N_JOURNALS: usize = 20;

/// Environment variable holding the chat-completion API token.
pub const LLM_TOKEN_ENV: &str = "TENOR_LLM_TOKEN";
/// Environment variable holding the transformer inference API token.
pub const TRANSFORMER_TOKEN_ENV: &str = "TENOR_HF_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Raw corpus for `ingest`. Later stages read the pipeline's own files.
    pub input_csv: Option<PathBuf>,
    /// Backend spec: `transformer:<model-id>` or `lexicon:<lexicon-file>`.
    pub backend: Option<String>,
    pub chunk_budget: usize,
    pub histogram_bins: usize,
    pub top_n_journals: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Chart file format; only `svg` is available.
    pub chart_format: String,
    pub columns: ColumnMap,
    /// Year range for the trend view. There is no default: the range is an
    /// explicit analysis choice.
    pub trend: Option<TrendRange>,
    pub llm: LlmConfig,
    pub transformer: TransformerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendRange {
    pub year_from: i32,
    pub year_to: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    /// JSON-lines response cache; doubles as the fixture store offline.
    pub cache_path: PathBuf,
    pub mode: LlmMode,
    /// Optional template overrides; `{abstract}` must appear exactly once.
    pub sentiment_prompt: Option<String>,
    pub subjectivity_prompt: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    /// Query the configured endpoint, filling the cache.
    Live,
    /// Serve everything from the cache; a miss is an error.
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformerConfig {
    /// Base URL joined with the model id for classification requests.
    pub endpoint: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_csv: None,
            backend: None,
            chunk_budget: DEFAULT_CHUNK_BUDGET,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            top_n_journals: DEFAULT_TOP_N_JOURNALS,
            output_dir: PathBuf::from("out"),
            seed: 0,
            chart_format: "svg".into(),
            columns: ColumnMap::default(),
            trend: None,
            llm: LlmConfig::default(),
            transformer: TransformerConfig::default(),
        }
    }
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            cache_path: PathBuf::from("llm_cache.jsonl"),
            mode: LlmMode::Fixture,
            sentiment_prompt: None,
            subjectivity_prompt: None,
        }
    }
}

impl Default for TransformerConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api-inference.huggingface.co/models".into(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))?;
        Ok(config)
    }
}
