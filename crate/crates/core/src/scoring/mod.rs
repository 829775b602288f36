//! Five-star sentiment scoring through a pluggable classification backend.
//!
//! Backends classify a text into a probability distribution over the star
//! labels 1–5. Texts longer than the backend's token budget are split into
//! word-boundary chunks, each chunk is classified independently, and the
//! chunk distributions are combined by a token-count weighted average.
//!
//! Two summaries are derived from the aggregated distribution and both are
//! exposed: `confidence`, the probability of the argmax label, and
//! `normalized_score`, the expected star value mapped linearly onto [0, 1].
//! Downstream analytics consume `normalized_score`.

pub mod lexicon;
pub mod transformer;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::{lexicon_classify, LexiconBackend};
pub use transformer::TransformerBackend;

/// Number of star classes.
pub const STAR_CLASSES: usize = 5;

/// Sequence positions reserved for the backend's delimiters when chunking.
pub const RESERVED_TOKENS: usize = 2;

/// Probabilities must sum to one within this tolerance.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// A star label in 1..=5. Label 1 is most negative, 5 most positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Star(u8);

impl Star {
    pub fn new(value: u8) -> Result<Self, ScoringError> {
        if (1..=5).contains(&value) {
            Ok(Star(value))
        } else {
            Err(ScoringError::BadStar(value))
        }
    }

    /// Star for a zero-based class index.
    pub fn from_index(index: usize) -> Result<Self, ScoringError> {
        Self::new(index as u8 + 1)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based class index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = Star> {
        (1..=5).map(Star)
    }
}

impl fmt::Display for Star {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u8> for Star {
    type Error = ScoringError;
    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Star::new(value)
    }
}

impl From<Star> for u8 {
    fn from(star: Star) -> u8 {
        star.0
    }
}

/// Probability vector over the five star classes; index i holds star i+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; STAR_CLASSES]", into = "[f64; STAR_CLASSES]")]
pub struct LabelDistribution {
    p: [f64; STAR_CLASSES],
}

impl LabelDistribution {
    /// Validate and wrap a probability vector.
    pub fn new(p: [f64; STAR_CLASSES]) -> Result<Self, ScoringError> {
        for (i, &v) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(ScoringError::BadProbability { index: i, value: v });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(ScoringError::BadProbabilitySum(sum));
        }
        Ok(Self { p })
    }

    /// All mass on one star.
    pub fn one_hot(star: Star) -> Self {
        let mut p = [0.0; STAR_CLASSES];
        p[star.index()] = 1.0;
        Self { p }
    }

    pub fn uniform() -> Self {
        Self {
            p: [1.0 / STAR_CLASSES as f64; STAR_CLASSES],
        }
    }

    pub fn probabilities(&self) -> &[f64; STAR_CLASSES] {
        &self.p
    }

    pub fn probability_of(&self, star: Star) -> f64 {
        self.p[star.index()]
    }

    /// Argmax label; ties break toward the lower star.
    pub fn argmax(&self) -> Star {
        let mut best = 0;
        for i in 1..STAR_CLASSES {
            if self.p[i] > self.p[best] {
                best = i;
            }
        }
        Star::from_index(best).expect("index in range")
    }

    /// Expected star value in [1, 5].
    pub fn expected_stars(&self) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(i, &v)| (i + 1) as f64 * v)
            .sum()
    }

    /// Expected star value mapped linearly onto [0, 1].
    pub fn normalized_score(&self) -> f64 {
        ((self.expected_stars() - 1.0) / 4.0).clamp(0.0, 1.0)
    }
}

impl TryFrom<[f64; STAR_CLASSES]> for LabelDistribution {
    type Error = ScoringError;
    fn try_from(p: [f64; STAR_CLASSES]) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<LabelDistribution> for [f64; STAR_CLASSES] {
    fn from(d: LabelDistribution) -> Self {
        d.p
    }
}

/// Classification of one chunk of a longer text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkScore {
    pub chunk_index: usize,
    pub token_count: usize,
    pub distribution: LabelDistribution,
}

impl ChunkScore {
    pub fn new(
        chunk_index: usize,
        token_count: usize,
        distribution: LabelDistribution,
    ) -> Result<Self, ScoringError> {
        if token_count == 0 {
            return Err(ScoringError::EmptyChunk { chunk_index });
        }
        Ok(Self {
            chunk_index,
            token_count,
            distribution,
        })
    }
}

/// Per-abstract scoring output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentResult {
    pub record_id: u64,
    /// Argmax of the aggregated distribution; ties break toward the lower star.
    pub label: Star,
    /// Aggregated probability of `label`.
    pub confidence: f64,
    /// (E[stars] - 1) / 4 of the aggregated distribution.
    pub normalized_score: f64,
    pub chunk_scores: Vec<ChunkScore>,
}

impl SentimentResult {
    /// Assemble a result from an aggregated distribution.
    pub fn from_distribution(
        record_id: u64,
        aggregated: &LabelDistribution,
        chunk_scores: Vec<ChunkScore>,
    ) -> Self {
        let label = aggregated.argmax();
        Self {
            record_id,
            label,
            confidence: aggregated.probability_of(label),
            normalized_score: aggregated.normalized_score(),
            chunk_scores,
        }
    }

    /// Rebuild a result from persisted score and label columns. Chunk detail
    /// and the full distribution are not persisted, so the label is taken at
    /// face value with confidence 1.0 and an empty chunk list.
    pub fn from_persisted(record_id: u64, label: Star, normalized_score: f64) -> Self {
        Self {
            record_id,
            label,
            confidence: 1.0,
            normalized_score,
            chunk_scores: Vec::new(),
        }
    }
}

/// Scoring failures.
#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("star label {0} outside [1, 5]")]
    BadStar(u8),
    #[error("probability at index {index} is {value}, outside [0, 1]")]
    BadProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    BadProbabilitySum(f64),
    #[error("chunk {chunk_index} has zero tokens")]
    EmptyChunk { chunk_index: usize },
    #[error("text is empty after normalization")]
    EmptyText,
    #[error("no chunk scores to aggregate")]
    NoChunks,
    #[error("token budget {budget} leaves no room for content")]
    BudgetTooSmall { budget: usize },
    #[error("backend {backend}: {message}")]
    Backend { backend: String, message: String },
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("lexicon file {path} line {line}: {detail}")]
    LexiconParse {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("cannot read lexicon file {path}: {source}")]
    LexiconRead {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown backend spec {0:?}; expected \"transformer:<model-id>\" or \"lexicon:<lexicon-file>\"")]
    UnknownBackendSpec(String),
}

/// A 5-class sentiment classifier with a token budget.
///
/// `classify` must be deterministic for a fixed configuration, and
/// `count_tokens` must return 0 for the empty string. Implementations are
/// shareable across scoring workers.
pub trait ScoringBackend: Send + Sync {
    fn classify(&self, text: &str) -> Result<LabelDistribution, ScoringError>;
    fn count_tokens(&self, text: &str) -> usize;
    fn max_tokens(&self) -> usize;
    fn name(&self) -> &str;
}

/// Chunks plus any warnings raised while fitting words to the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunking {
    pub chunks: Vec<String>,
    pub warnings: Vec<String>,
}

/// Split text into word-boundary chunks, each within the backend's budget
/// less [`RESERVED_TOKENS`] delimiter positions. Greedy fill: every chunk
/// takes the maximal prefix of the remaining words that fits. A single word
/// over the budget is truncated to fit and a warning recorded.
pub fn chunk_text(text: &str, backend: &dyn ScoringBackend) -> Result<Chunking, ScoringError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err(ScoringError::EmptyText);
    }
    let budget = backend
        .max_tokens()
        .checked_sub(RESERVED_TOKENS)
        .filter(|&b| b >= 1)
        .ok_or(ScoringError::BudgetTooSmall {
            budget: backend.max_tokens(),
        })?;

    let mut warnings = Vec::new();
    let mut owned_words: Vec<String> = Vec::with_capacity(words.len());
    let mut counts: Vec<usize> = Vec::with_capacity(words.len());
    for word in &words {
        let count = backend.count_tokens(word);
        if count > budget {
            let truncated = truncate_word(word, budget, backend);
            warnings.push(format!(
                "word of {count} tokens exceeds the {budget}-token budget; truncated"
            ));
            counts.push(backend.count_tokens(&truncated).max(1));
            owned_words.push(truncated);
        } else {
            counts.push(count.max(1));
            owned_words.push((*word).to_string());
        }
    }

    let mut chunks = Vec::new();
    let mut start = 0;
    while start < owned_words.len() {
        let mut end = start;
        let mut used = 0;
        while end < owned_words.len() && used + counts[end] <= budget {
            used += counts[end];
            end += 1;
        }
        debug_assert!(end > start, "a fitted word always advances the window");

        // Token counts need not be additive across words for every backend;
        // verify the assembled chunk and shrink if it measures over budget.
        let mut chunk = owned_words[start..end].join(" ");
        while end > start + 1 && backend.count_tokens(&chunk) > budget {
            end -= 1;
            chunk = owned_words[start..end].join(" ");
        }
        chunks.push(chunk);
        start = end;
    }

    Ok(Chunking { chunks, warnings })
}

/// Longest character prefix of `word` that fits the budget.
fn truncate_word(word: &str, budget: usize, backend: &dyn ScoringBackend) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut lo = 1;
    let mut hi = chars.len();
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        let candidate: String = chars[..mid].iter().collect();
        if backend.count_tokens(&candidate) <= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    chars[..lo].iter().collect()
}

/// Token-count weighted average of chunk distributions.
pub fn aggregate_chunks(chunk_scores: &[ChunkScore]) -> Result<LabelDistribution, ScoringError> {
    if chunk_scores.is_empty() {
        return Err(ScoringError::NoChunks);
    }
    let total: f64 = chunk_scores.iter().map(|c| c.token_count as f64).sum();
    let mut p = [0.0; STAR_CLASSES];
    for chunk in chunk_scores {
        let w = chunk.token_count as f64 / total;
        for (acc, &v) in p.iter_mut().zip(chunk.distribution.probabilities()) {
            *acc += w * v;
        }
    }
    // keep the vector exactly on the simplex despite float drift
    let sum: f64 = p.iter().sum();
    for v in &mut p {
        *v /= sum;
    }
    LabelDistribution::new(p)
}

/// Score one record: chunk, classify each chunk, aggregate.
pub fn score_record(
    record: &crate::corpus::AbstractRecord,
    backend: &dyn ScoringBackend,
) -> Result<SentimentResult, ScoringError> {
    let text = crate::corpus::normalize_text(&record.abstract_text);
    let chunking = chunk_text(&text, backend)?;
    let mut chunk_scores = Vec::with_capacity(chunking.chunks.len());
    for (i, chunk) in chunking.chunks.iter().enumerate() {
        let distribution = backend.classify(chunk)?;
        let tokens = backend.count_tokens(chunk).max(1);
        chunk_scores.push(ChunkScore::new(i, tokens, distribution)?);
    }
    let aggregated = aggregate_chunks(&chunk_scores)?;
    Ok(SentimentResult::from_distribution(
        record.record_id,
        &aggregated,
        chunk_scores,
    ))
}

/// A record that could not be scored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreFailure {
    pub record_id: u64,
    pub reason: String,
}

/// Outcome of a corpus scoring run: results ordered by record id, failures
/// collected per record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRun {
    pub results: Vec<SentimentResult>,
    pub failures: Vec<ScoreFailure>,
}

/// Score a corpus, optionally fanning records out over `parallelism` worker
/// threads. Output is ordered by record id and identical for any worker
/// count; one failing record does not affect the others.
pub fn score_corpus(
    records: &[crate::corpus::AbstractRecord],
    backend: &dyn ScoringBackend,
    parallelism: usize,
) -> ScoreRun {
    let outcomes: Vec<Result<SentimentResult, ScoreFailure>> = if parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .expect("worker pool");
        pool.install(|| {
            use rayon::prelude::*;
            records
                .par_iter()
                .map(|r| score_one(r, backend))
                .collect()
        })
    } else {
        records.iter().map(|r| score_one(r, backend)).collect()
    };

    let mut run = ScoreRun {
        results: Vec::with_capacity(records.len()),
        failures: Vec::new(),
    };
    for outcome in outcomes {
        match outcome {
            Ok(result) => run.results.push(result),
            Err(failure) => run.failures.push(failure),
        }
    }
    run
}

fn score_one(
    record: &crate::corpus::AbstractRecord,
    backend: &dyn ScoringBackend,
) -> Result<SentimentResult, ScoreFailure> {
    score_record(record, backend).map_err(|e| ScoreFailure {
        record_id: record.record_id,
        reason: e.to_string(),
    })
}

/// Backend selection string: `transformer:<model-id>` or
/// `lexicon:<lexicon-file>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Transformer(String),
    Lexicon(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = ScoringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("transformer", model)) if !model.is_empty() => {
                Ok(BackendSpec::Transformer(model.to_string()))
            }
            Some(("lexicon", path)) if !path.is_empty() => {
                Ok(BackendSpec::Lexicon(PathBuf::from(path)))
            }
            _ => Err(ScoringError::UnknownBackendSpec(s.to_string())),
        }
    }
}
