//! Deterministic word-polarity backend.
//!
//! Counts positive and negative lexicon hits over case-folded word tokens,
//! maps the polarity ratio onto a star label and answers with a one-hot
//! distribution. Ships in-tree so the full pipeline and test suite run
//! without a model download or network access.

use std::collections::HashMap;
use std::path::Path;

use super::{LabelDistribution, ScoringBackend, ScoringError, Star};

/// Word-polarity classifier. Lexicon values are +1 or -1.
#[derive(Debug, Clone)]
pub struct LexiconBackend {
    lexicon: HashMap<String, i8>,
    max_tokens: usize,
    name: String,
}

impl LexiconBackend {
    pub fn new(lexicon: HashMap<String, i8>, max_tokens: usize) -> Result<Self, ScoringError> {
        if lexicon.is_empty() {
            return Err(ScoringError::EmptyLexicon);
        }
        Ok(Self {
            lexicon,
            max_tokens,
            name: "lexicon".into(),
        })
    }

    /// Load a lexicon file: UTF-8 lines of `word<TAB>+1|-1`. Blank lines are
    /// skipped.
    pub fn from_file(path: &Path, max_tokens: usize) -> Result<Self, ScoringError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScoringError::LexiconRead {
            path: path.display().to_string(),
            source,
        })?;
        let mut lexicon = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |detail: &str| ScoringError::LexiconParse {
                path: path.display().to_string(),
                line: i + 1,
                detail: detail.into(),
            };
            let (word, polarity) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected word<TAB>+1|-1"))?;
            let word = word.trim();
            if word.is_empty() {
                return Err(parse_err("empty word"));
            }
            let polarity = match polarity.trim() {
                "+1" => 1i8,
                "-1" => -1i8,
                other => return Err(parse_err(&format!("polarity {other:?} is not +1 or -1"))),
            };
            lexicon.insert(word.to_lowercase(), polarity);
        }
        let mut backend = Self::new(lexicon, max_tokens)?;
        backend.name = format!("lexicon:{}", path.display());
        Ok(backend)
    }

    pub fn len(&self) -> usize {
        self.lexicon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lexicon.is_empty()
    }
}

impl ScoringBackend for LexiconBackend {
    fn classify(&self, text: &str) -> Result<LabelDistribution, ScoringError> {
        Ok(lexicon_classify(text, &self.lexicon))
    }

    fn count_tokens(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Classify text against a word-polarity lexicon.
///
/// Tokens are whitespace-delimited words, case-folded, with leading and
/// trailing non-alphanumeric characters trimmed so that ordinary punctuation
/// does not hide a hit. With P positive and N negative hits, the polarity
/// ratio r = (P - N) / max(1, P + N) maps to the star round(3 + 2r), rounded
/// half away from zero and clamped to [1, 5]; the result is one-hot at that
/// star. Text with no hits is neutral: star 3.
pub fn lexicon_classify(text: &str, lexicon: &HashMap<String, i8>) -> LabelDistribution {
    let mut positive = 0i64;
    let mut negative = 0i64;
    for token in text.split_whitespace() {
        let token = token
            .to_lowercase()
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_string();
        if token.is_empty() {
            continue;
        }
        match lexicon.get(&token) {
            Some(1) => positive += 1,
            Some(-1) => negative += 1,
            _ => {}
        }
    }
    let hits = (positive + negative).max(1) as f64;
    let ratio = (positive - negative) as f64 / hits;
    let star = (3.0 + 2.0 * ratio).round().clamp(1.0, 5.0) as u8;
    LabelDistribution::one_hot(Star::new(star).expect("clamped to range"))
}
