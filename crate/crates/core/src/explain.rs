//! Token-level Shapley attributions for a single abstract's prediction.
//!
//! Players are the whitespace words of the text. A coalition's value is the
//! explained quantity of the backend's classification of the coalition's
//! words joined in text order; out-of-coalition words are removed. The empty
//! coalition is assigned the neutral value: 0.5 when explaining the
//! normalized score, uniform 0.2 when explaining a label probability.
//!
//! Exact mode enumerates all 2^n coalitions and is capped at 12 words.
//! Sampled mode averages marginal contributions over seeded random
//! permutations; when the requested sample count covers every permutation of
//! a short text it enumerates them instead, which reproduces the exact
//! values. Permutations are pre-generated from the seed so results do not
//! depend on evaluation order or worker count.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{ScoringBackend, ScoringError, Star};

/// Exact enumeration bound: 2^12 = 4096 coalition evaluations.
pub const MAX_EXACT_WORDS: usize = 12;

/// Which model output the attribution explains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainedQuantity {
    /// Expected-star score mapped onto [0, 1].
    NormalizedScore,
    /// Probability of the label predicted for the full text.
    ProbabilityOfLabel,
}

impl ExplainedQuantity {
    fn neutral_value(self) -> f64 {
        match self {
            ExplainedQuantity::NormalizedScore => 0.5,
            ExplainedQuantity::ProbabilityOfLabel => 0.2,
        }
    }
}

impl fmt::Display for ExplainedQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplainedQuantity::NormalizedScore => f.write_str("normalized_score"),
            ExplainedQuantity::ProbabilityOfLabel => f.write_str("probability_of_label"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionMethod {
    ExactShapley,
    SampledShapley,
}

/// One word's contribution to the explained output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAttribution {
    pub token: String,
    pub value: f64,
}

/// Attribution of one prediction across its words, in text order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub record_id: u64,
    pub explained_quantity: ExplainedQuantity,
    /// Label predicted for the full text; the explained class when the
    /// quantity is a label probability.
    pub predicted_label: Star,
    pub base_value: f64,
    pub attributions: Vec<TokenAttribution>,
    pub model_output: f64,
    pub method: AttributionMethod,
    /// Number of sampled permutations; 0 for exact mode.
    pub sample_count: u64,
    /// model_output - (base_value + sum of attributions). Zero up to float
    /// error in exact mode, an estimator diagnostic in sampled mode.
    pub additivity_gap: f64,
    /// Per-token standard error of the sampled estimate; absent in exact mode.
    pub std_errors: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("text has no words after normalization")]
    EmptyText,
    #[error("{count} words exceed the {max}-word bound for exact attribution")]
    TooManyWords { count: usize, max: usize },
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error(transparent)]
    Backend(#[from] ScoringError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// The coalition value function over a fixed word list.
struct CoalitionGame<'a> {
    words: Vec<&'a str>,
    backend: &'a dyn ScoringBackend,
    quantity: ExplainedQuantity,
    label: Star,
}

impl<'a> CoalitionGame<'a> {
    fn new(
        text: &'a str,
        backend: &'a dyn ScoringBackend,
        quantity: ExplainedQuantity,
    ) -> Result<Self, ExplainError> {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            return Err(ExplainError::EmptyText);
        }
        let full = backend.classify(&words.join(" "))?;
        Ok(Self {
            words,
            backend,
            quantity,
            label: full.argmax(),
        })
    }

    fn len(&self) -> usize {
        self.words.len()
    }

    /// Value of the coalition selected by `mask` bit i <=> word i present.
    fn value(&self, mask: u32) -> Result<f64, ExplainError> {
        if mask == 0 {
            return Ok(self.quantity.neutral_value());
        }
        let text: Vec<&str> = self
            .words
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, w)| *w)
            .collect();
        let distribution = self.backend.classify(&text.join(" "))?;
        Ok(match self.quantity {
            ExplainedQuantity::NormalizedScore => distribution.normalized_score(),
            ExplainedQuantity::ProbabilityOfLabel => distribution.probability_of(self.label),
        })
    }
}

/// Classical Shapley values by full coalition enumeration. The word count is
/// capped at [`MAX_EXACT_WORDS`].
pub fn attribute_exact(
    record_id: u64,
    text: &str,
    backend: &dyn ScoringBackend,
    quantity: ExplainedQuantity,
) -> Result<AttributionReport, ExplainError> {
    let game = CoalitionGame::new(text, backend, quantity)?;
    let n = game.len();
    if n > MAX_EXACT_WORDS {
        return Err(ExplainError::TooManyWords {
            count: n,
            max: MAX_EXACT_WORDS,
        });
    }

    let full_mask: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut values = vec![0.0f64; 1 << n];
    for mask in 0..=full_mask {
        values[mask as usize] = game.value(mask)?;
    }

    // weight for a coalition of size s joined by one more player
    let factorial: Vec<f64> = (0..=n).scan(1.0f64, |acc, i| {
        if i > 0 {
            *acc *= i as f64;
        }
        Some(*acc)
    })
    .collect();
    let weight = |s: usize| factorial[s] * factorial[n - 1 - s] / factorial[n];

    let mut attributions = Vec::with_capacity(n);
    for i in 0..n {
        let bit = 1u32 << i;
        let mut phi = 0.0;
        for mask in 0..=full_mask {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            phi += weight(s) * (values[(mask | bit) as usize] - values[mask as usize]);
        }
        attributions.push(TokenAttribution {
            token: game.words[i].to_string(),
            value: phi,
        });
    }

    let base_value = values[0];
    let model_output = values[full_mask as usize];
    let gap = model_output - base_value - attributions.iter().map(|a| a.value).sum::<f64>();
    Ok(AttributionReport {
        record_id,
        explained_quantity: quantity,
        predicted_label: game.label,
        base_value,
        attributions,
        model_output,
        method: AttributionMethod::ExactShapley,
        sample_count: 0,
        additivity_gap: gap,
        std_errors: None,
    })
}

/// Count of permutations of n elements, saturating.
fn permutation_count(n: usize) -> u64 {
    let mut total: u64 = 1;
    for i in 1..=n as u64 {
        total = total.saturating_mul(i);
    }
    total
}

/// Next permutation in lexicographic order; false once the last is reached.
fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Permutation-sampling Shapley estimate, deterministic for a fixed seed.
/// If `samples` covers every permutation of the text, all permutations are
/// enumerated exactly once instead of sampled.
pub fn attribute_sampled(
    record_id: u64,
    text: &str,
    backend: &dyn ScoringBackend,
    quantity: ExplainedQuantity,
    samples: u64,
    seed: u64,
) -> Result<AttributionReport, ExplainError> {
    if samples == 0 {
        return Err(ExplainError::ZeroSamples);
    }
    let game = CoalitionGame::new(text, backend, quantity)?;
    let n = game.len();

    let total_perms = permutation_count(n);
    let exhaustive = samples >= total_perms && n <= 10;

    let permutations: Vec<Vec<usize>> = if exhaustive {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut all = Vec::with_capacity(total_perms as usize);
        loop {
            all.push(perm.clone());
            if !next_permutation(&mut perm) {
                break;
            }
        }
        all
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                // Fisher-Yates over the identity
                let mut perm: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    perm.swap(i, j);
                }
                perm
            })
            .collect()
    };
    let sample_count = permutations.len() as u64;

    // one marginal per player per permutation; evaluation order is free
    // because each row depends only on its own permutation
    let marginal_rows: Vec<Result<Vec<f64>, ExplainError>> = permutations
        .par_iter()
        .map(|perm| {
            let mut row = vec![0.0f64; n];
            let mut mask: u32 = 0;
            let mut previous = game.quantity.neutral_value();
            for &player in perm {
                mask |= 1 << player;
                let current = game.value(mask)?;
                row[player] = current - previous;
                previous = current;
            }
            Ok(row)
        })
        .collect();

    let mut sums = vec![0.0f64; n];
    let mut sq_sums = vec![0.0f64; n];
    for row in marginal_rows {
        let row = row?;
        for i in 0..n {
            sums[i] += row[i];
            sq_sums[i] += row[i] * row[i];
        }
    }

    let s = sample_count as f64;
    let attributions: Vec<TokenAttribution> = game
        .words
        .iter()
        .zip(&sums)
        .map(|(word, &sum)| TokenAttribution {
            token: (*word).to_string(),
            value: sum / s,
        })
        .collect();
    let std_errors: Vec<f64> = (0..n)
        .map(|i| {
            if sample_count < 2 {
                return 0.0;
            }
            let mean = sums[i] / s;
            let variance = ((sq_sums[i] / s) - mean * mean).max(0.0) * s / (s - 1.0);
            (variance / s).sqrt()
        })
        .collect();

    let base_value = game.quantity.neutral_value();
    let model_output = game.value(if n == 32 { u32::MAX } else { (1 << n) - 1 })?;
    let gap = model_output - base_value - attributions.iter().map(|a| a.value).sum::<f64>();
    Ok(AttributionReport {
        record_id,
        explained_quantity: quantity,
        predicted_label: game.label,
        base_value,
        attributions,
        model_output,
        method: AttributionMethod::SampledShapley,
        sample_count,
        additivity_gap: gap,
        std_errors: Some(std_errors),
    })
}

fn escape_html(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&#39;")
}

/// Render the highlighted inspection report: red backgrounds for positive
/// contributions, blue for negative, opacity proportional to the magnitude
/// relative to the largest one. Self-contained HTML, inline styles only.
pub fn render_attribution_html(
    report: &AttributionReport,
    text: &str,
    out_path: &Path,
) -> Result<(), ExplainError> {
    let max_abs = report
        .attributions
        .iter()
        .map(|a| a.value.abs())
        .fold(0.0f64, f64::max);

    let mut spans = String::new();
    for attribution in &report.attributions {
        let alpha = if max_abs > 0.0 {
            attribution.value.abs() / max_abs
        } else {
            0.0
        };
        let style = if alpha == 0.0 {
            String::new()
        } else if attribution.value > 0.0 {
            format!(" style=\"background-color: rgba(255,0,0,{alpha:.3})\"")
        } else {
            format!(" style=\"background-color: rgba(0,0,255,{alpha:.3})\"")
        };
        spans.push_str(&format!(
            "<span class=\"tok\"{style} title=\"{value:+.6}\">{token}</span>\n",
            value = attribution.value,
            token = escape_html(&attribution.token),
        ));
    }

    let method = match report.method {
        AttributionMethod::ExactShapley => "exact Shapley (all coalitions)".to_string(),
        AttributionMethod::SampledShapley => format!(
            "sampled Shapley ({} permutations)",
            report.sample_count
        ),
    };
    let html = format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>Attribution for record {id}</title>\n</head>\n\
         <body style=\"font-family: sans-serif; max-width: 60em; margin: 2em auto; line-height: 1.8\">\n\
         <h1 style=\"font-size: 1.2em\">Record {id}: word influence on {quantity}</h1>\n\
         <p>Predicted label: <strong>{label}</strong>. Base value {base:.6}, model output {output:.6}.\n\
         Red raises the {quantity}, blue lowers it; darker means stronger.</p>\n\
         <p style=\"border: 1px solid #ccc; padding: 1em\">\n{spans}</p>\n\
         <p style=\"color: #555; font-size: 0.9em\">Method: {method}.</p>\n\
         <details><summary>Original text</summary><p>{text}</p></details>\n\
         </body>\n</html>\n",
        id = report.record_id,
        quantity = report.explained_quantity,
        label = report.predicted_label,
        base = report.base_value,
        output = report.model_output,
        text = escape_html(text),
    );

    std::fs::write(out_path, html).map_err(|source| ExplainError::Write {
        path: out_path.display().to_string(),
        source,
    })
}

/// Companion machine-readable report.
pub fn write_attribution_json(
    report: &AttributionReport,
    out_path: &Path,
) -> Result<(), ExplainError> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(out_path, json + "\n").map_err(|source| ExplainError::Write {
        path: out_path.display().to_string(),
        source,
    })
}
