//! Batch sentiment analytics for corpora of scientific abstracts.
//!
//! The pipeline ingests a CSV corpus, scores each abstract on the 1-5 star
//! scale through a pluggable backend (chunking long texts under the token
//! budget), aggregates sentiment by year and journal, explains individual
//! predictions with token-level Shapley attributions, and cross-checks
//! labels against an external chat-completion API.
//!
//! Modules follow the pipeline stages:
//!
//! - [`corpus`]: load, validate, normalize, deduplicate and persist records
//! - [`scoring`]: star-label classification with chunked inference
//! - [`analytics`]: histogram, yearly trend and per-journal aggregates
//! - [`explain`]: exact and sampled Shapley word attributions
//! - [`llm`]: prompt construction, cached querying and agreement statistics

pub mod analytics;
pub mod corpus;
pub mod explain;
pub mod llm;
pub mod scoring;
