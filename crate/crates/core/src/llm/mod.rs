//! Cross-checking model labels against an external large-language-model API:
//! prompt construction, response parsing, cached querying and agreement
//! statistics.

pub mod cache;
pub mod client;

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, CacheEntry, ResponseCache};
pub use client::{HttpLlmClient, LlmClient, LlmResponse, LlmSession, OfflineClient, RetryPolicy};

use crate::corpus::AbstractRecord;
use crate::scoring::{SentimentResult, Star};

pub const PLACEHOLDER: &str = "{abstract}";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("endpoint returned {status}: {body}")]
    Http { status: u16, body: String },
    #[error("network failure: {0}")]
    Network(String),
    #[error("cannot interpret completion response: {0}")]
    BadResponse(String),
    #[error("fixture miss for model {model}: no cached response for prompt {prompt_excerpt:?}")]
    FixtureMiss {
        model: String,
        prompt_excerpt: String,
    },
    #[error("cache file {path}: {source}")]
    CacheIo {
        path: String,
        source: std::io::Error,
    },
    #[error("cache file {path} line {line}: {detail}")]
    CacheParse {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("no star rating found in response: {response:?}")]
    ParseStar { response: String },
    #[error("template must contain the {PLACEHOLDER} placeholder exactly once, found {found}")]
    PromptPlaceholder { found: usize },
    #[error("abstract is empty")]
    EmptyAbstract,
    #[error("sample size {requested} exceeds corpus size {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("record {record_id} has no scoring result")]
    MissingResult { record_id: u64 },
    #[error("all {failures} sampled records failed to parse")]
    AllSamplesFailed { failures: usize },
}

/// The two shipped validation prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Sentiment1To5,
    SubjectivityPhrases,
}

/// A prompt with exactly one `{abstract}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: PromptKind,
    pub template_text: String,
}

impl PromptTemplate {
    pub fn new(name: PromptKind, template_text: &str) -> Result<Self, LlmError> {
        let found = template_text.matches(PLACEHOLDER).count();
        if found != 1 {
            return Err(LlmError::PromptPlaceholder { found });
        }
        Ok(Self {
            name,
            template_text: template_text.to_string(),
        })
    }

    /// Built-in default wording for each prompt.
    pub fn default_for(name: PromptKind) -> Self {
        let text = match name {
            PromptKind::Sentiment1To5 => {
                "Read the scientific abstract below and rate its overall sentiment \
                 on a scale from 1 to 5, where 1 is the most negative and 5 is the \
                 most positive. State the rating as a single digit first, then \
                 briefly explain your reasoning.\n\nAbstract: {abstract}"
            }
            PromptKind::SubjectivityPhrases => {
                "Read the scientific abstract below and identify the specific words \
                 and phrases that carry the strongest subjective tone. Quote each \
                 one, most subjective first.\n\nAbstract: {abstract}"
            }
        };
        Self::new(name, text).expect("default templates carry one placeholder")
    }
}

/// Substitute the abstract into the template verbatim. Braces inside the
/// abstract are preserved; nothing else is rewritten.
pub fn build_prompt(template: &PromptTemplate, abstract_text: &str) -> Result<String, LlmError> {
    if abstract_text.trim().is_empty() {
        return Err(LlmError::EmptyAbstract);
    }
    let mut parts = template.template_text.splitn(2, PLACEHOLDER);
    let head = parts.next().unwrap_or_default();
    let tail = parts.next().unwrap_or_default();
    Ok(format!("{head}{abstract_text}{tail}"))
}

/// A rating candidate found in a response.
#[derive(Debug, Clone, Copy)]
struct RatingCandidate {
    position: usize,
    value: u8,
}

fn rating_cue_regex() -> &'static Regex {
    use std::sync::OnceLock;
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(rat(?:e[sd]?|ings?)|scor(?:e[sd]?|ings?)|classif(?:y|ie[sd]|ication))\b")
            .expect("cue regex compiles")
    })
}

fn fraction_form_regex() -> &'static Regex {
    use std::sync::OnceLock;
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b([1-5])\s*(/\s*5|out\s+of\s+5)\b").expect("fraction regex compiles")
    })
}

/// Standalone integers 1-5: not adjacent to other digits, not part of a
/// decimal like 4.5 or a grouped number like 1,000.
fn standalone_candidates(response: &str) -> Vec<RatingCandidate> {
    let bytes = response.as_bytes();
    let mut candidates = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        if !(b'1'..=b'5').contains(&b) {
            continue;
        }
        let prev = if i > 0 { Some(bytes[i - 1]) } else { None };
        let next = bytes.get(i + 1).copied();
        // part of a larger integer
        if prev.is_some_and(|p| p.is_ascii_digit()) || next.is_some_and(|n| n.is_ascii_digit()) {
            continue;
        }
        // decimal tail or head: 4.5, .4
        if prev == Some(b'.') && i >= 2 && bytes[i - 2].is_ascii_digit() {
            continue;
        }
        if next == Some(b'.') && bytes.get(i + 2).is_some_and(|c| c.is_ascii_digit()) {
            continue;
        }
        // grouped thousands: 1,000
        if next == Some(b',') && bytes.get(i + 2).is_some_and(|c| c.is_ascii_digit()) {
            continue;
        }
        candidates.push(RatingCandidate {
            position: i,
            value: b - b'0',
        });
    }
    candidates
}

/// Extract the star rating from a free-text response.
///
/// Candidates are standalone integers 1-5; in `X/5` and `X out of 5` forms
/// the denominator does not count as a candidate. The rating is the first
/// candidate after a rating cue (`rate`, `rating`, `score`, `classify`,
/// case-insensitive, inflections included) or, failing that, the first
/// candidate anywhere in the response.
pub fn parse_star_rating(response: &str) -> Result<Star, LlmError> {
    let mut denominator_spans: Vec<(usize, usize)> = Vec::new();
    let mut candidates: Vec<RatingCandidate> = Vec::new();

    for capture in fraction_form_regex().captures_iter(response) {
        let whole = capture.get(0).expect("match");
        let numerator = capture.get(1).expect("group");
        candidates.push(RatingCandidate {
            position: numerator.start(),
            value: numerator.as_str().as_bytes()[0] - b'0',
        });
        denominator_spans.push((numerator.end(), whole.end()));
    }

    for candidate in standalone_candidates(response) {
        let inside_fraction = denominator_spans
            .iter()
            .any(|&(start, end)| candidate.position >= start && candidate.position < end)
            || candidates.iter().any(|c| c.position == candidate.position);
        if !inside_fraction {
            candidates.push(candidate);
        }
    }
    candidates.sort_by_key(|c| c.position);

    if candidates.is_empty() {
        return Err(LlmError::ParseStar {
            response: response.to_string(),
        });
    }

    let chosen = match rating_cue_regex().find(response) {
        Some(cue) => candidates
            .iter()
            .find(|c| c.position >= cue.end())
            .or(candidates.first()),
        None => candidates.first(),
    }
    .expect("candidates nonempty");

    Star::new(chosen.value).map_err(|_| LlmError::ParseStar {
        response: response.to_string(),
    })
}

const QUOTE_PAIRS: [(char, char); 4] = [('"', '"'), ('\u{201C}', '\u{201D}'), ('\u{2018}', '\u{2019}'), ('\'', '\'')];

fn is_list_item(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    for marker in ["- ", "* ", "\u{2022} "] {
        if let Some(rest) = trimmed.strip_prefix(marker) {
            return Some(rest.trim());
        }
    }
    // numbered items: 1. text / 2) text
    let digits: String = trimmed.chars().take_while(|c| c.is_ascii_digit()).collect();
    if !digits.is_empty() {
        let rest = &trimmed[digits.len()..];
        if let Some(rest) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            if rest.starts_with(' ') || rest.starts_with('\t') {
                return Some(rest.trim());
            }
        }
    }
    None
}

/// Strip one layer of wrapping quotes of any recognized style.
fn strip_wrapping_quotes(text: &str) -> &str {
    for &(open, close) in &QUOTE_PAIRS {
        if let Some(inner) = text
            .strip_prefix(open)
            .and_then(|rest| rest.strip_suffix(close))
        {
            if !inner.is_empty() {
                return inner;
            }
        }
    }
    text
}

/// Quoted spans within one line, in order.
fn quoted_spans(line: &str) -> Vec<String> {
    let chars: Vec<char> = line.chars().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pair = QUOTE_PAIRS.iter().find(|&&(open, _)| open == c);
        let Some(&(open, close)) = pair else {
            i += 1;
            continue;
        };
        // a straight single quote only opens at a word boundary, so
        // apostrophes inside words stay untouched
        if open == '\'' && i > 0 && chars[i - 1].is_alphanumeric() {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        let mut end = None;
        while j < chars.len() {
            if chars[j] == close {
                let boundary = close != '\''
                    || chars.get(j + 1).is_none_or(|n| !n.is_alphanumeric());
                if boundary {
                    end = Some(j);
                    break;
                }
            }
            j += 1;
        }
        match end {
            Some(j) => {
                let inner: String = chars[i + 1..j].iter().collect();
                let inner = inner.trim();
                if !inner.is_empty() {
                    spans.push(inner.to_string());
                }
                i = j + 1;
            }
            None => i += 1,
        }
    }
    spans
}

/// Extract subjective phrases from a response: quoted spans plus numbered or
/// bulleted list items, in order, duplicates removed. An empty list is a
/// valid outcome.
pub fn parse_subjective_phrases(response: &str) -> Vec<String> {
    let mut phrases = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for line in response.lines() {
        let found: Vec<String> = match is_list_item(line) {
            Some(content) => {
                let content = strip_wrapping_quotes(content).trim();
                if content.is_empty() {
                    Vec::new()
                } else {
                    vec![content.to_string()]
                }
            }
            None => quoted_spans(line),
        };
        for phrase in found {
            if seen.insert(phrase.clone()) {
                phrases.push(phrase);
            }
        }
    }
    phrases
}

/// Parsed judgment of one abstract by the external model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmVerdict {
    pub record_id: u64,
    pub prompt_name: PromptKind,
    /// Present only for the sentiment prompt when a rating parsed.
    pub stars: Option<Star>,
    pub subjective_phrases: Vec<String>,
    pub raw_response: String,
    pub from_cache: bool,
}

/// Query the session with one template for one record and parse the reply.
pub fn judge(
    session: &LlmSession,
    template: &PromptTemplate,
    record: &AbstractRecord,
) -> Result<LlmVerdict, LlmError> {
    let prompt = build_prompt(template, &record.abstract_text)?;
    let response = session.query(&prompt)?;
    let (stars, subjective_phrases) = match template.name {
        PromptKind::Sentiment1To5 => (parse_star_rating(&response.text).ok(), Vec::new()),
        PromptKind::SubjectivityPhrases => (None, parse_subjective_phrases(&response.text)),
    };
    Ok(LlmVerdict {
        record_id: record.record_id,
        prompt_name: template.name,
        stars,
        subjective_phrases,
        raw_response: response.text,
        from_cache: response.from_cache,
    })
}

/// Agreement between model labels and LLM stars over a validated sample.
/// `confusion[i][j]` counts records with model label i+1 and LLM star j+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub n: u64,
    pub exact_match_rate: f64,
    pub mean_absolute_star_error: f64,
    pub confusion: [[u64; 5]; 5],
}

/// A sampled record whose response produced no rating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub record_id: u64,
    pub raw_response: String,
}

/// Full cross-validation outcome: statistics over parsed verdicts plus the
/// failures excluded from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub stats: AgreementStats,
    pub parse_failures: Vec<ValidationFailure>,
    pub served_from_cache: u64,
}

/// Deterministic sample of `sample_size` record indices, without
/// replacement: a seeded partial Fisher-Yates over 0..n, selection sorted
/// ascending.
pub fn sample_indices(n: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    let take = sample_size.min(n);
    for i in 0..take {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }
    let mut selected = indices[..take].to_vec();
    selected.sort_unstable();
    selected
}

/// Compare model labels against LLM stars on a seeded sample of records.
/// Parse failures are excluded from `n` and reported separately; a run where
/// every sampled record fails is an error.
pub fn cross_validate(
    records: &[AbstractRecord],
    results: &[SentimentResult],
    session: &LlmSession,
    template: &PromptTemplate,
    sample_size: usize,
    seed: u64,
) -> Result<CrossValidation, LlmError> {
    if sample_size > records.len() {
        return Err(LlmError::SampleTooLarge {
            requested: sample_size,
            available: records.len(),
        });
    }
    let labels: HashMap<u64, Star> = results.iter().map(|r| (r.record_id, r.label)).collect();

    let mut confusion = [[0u64; 5]; 5];
    let mut parse_failures = Vec::new();
    let mut matched = 0u64;
    let mut absolute_error = 0u64;
    let mut n = 0u64;
    let mut served_from_cache = 0u64;

    for &idx in &sample_indices(records.len(), sample_size, seed) {
        let record = &records[idx];
        let model_label = *labels
            .get(&record.record_id)
            .ok_or(LlmError::MissingResult {
                record_id: record.record_id,
            })?;
        let verdict = judge(session, template, record)?;
        if verdict.from_cache {
            served_from_cache += 1;
        }
        match verdict.stars {
            Some(llm_star) => {
                confusion[model_label.index()][llm_star.index()] += 1;
                n += 1;
                if llm_star == model_label {
                    matched += 1;
                }
                absolute_error +=
                    (i16::from(model_label.value()) - i16::from(llm_star.value())).unsigned_abs()
                        as u64;
            }
            None => parse_failures.push(ValidationFailure {
                record_id: record.record_id,
                raw_response: verdict.raw_response,
            }),
        }
    }

    if n == 0 {
        return Err(LlmError::AllSamplesFailed {
            failures: parse_failures.len(),
        });
    }

    Ok(CrossValidation {
        stats: AgreementStats {
            n,
            exact_match_rate: matched as f64 / n as f64,
            mean_absolute_star_error: absolute_error as f64 / n as f64,
            confusion,
        },
        parse_failures,
        served_from_cache,
    })
}
