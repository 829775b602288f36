//! Transformer backend over a hosted text-classification endpoint.
//!
//! Adapts a 5-class review-sentiment model (for example
//! `nlptown/bert-base-multilingual-uncased-sentiment`) served behind an
//! inference HTTP API. The request body is `{"inputs": <text>}` and the
//! response a ranked list of `{"label": "<n> star(s)", "score": p}` entries,
//! optionally nested one level, as the common inference servers return.
//!
//! Token counting is whitespace word counting: the served model enforces its
//! own sequence limit, and the 512 budget here is expressed in words, so
//! chunk sizes stay a conservative approximation callers can lower via the
//! budget setting.

use std::time::Duration;

use serde::Deserialize;

use super::{LabelDistribution, ScoringBackend, ScoringError, STAR_CLASSES};

/// HTTP adapter satisfying [`ScoringBackend`] for a remote 5-class model.
pub struct TransformerBackend {
    model_id: String,
    url: String,
    api_token: Option<String>,
    max_tokens: usize,
    client: reqwest::blocking::Client,
}

#[derive(Debug, Deserialize)]
struct LabelScore {
    label: String,
    score: f64,
}

impl TransformerBackend {
    /// `base_url` is joined with the model id, e.g.
    /// `https://api-inference.huggingface.co/models` +
    /// `nlptown/bert-base-multilingual-uncased-sentiment`.
    pub fn new(
        model_id: &str,
        base_url: &str,
        api_token: Option<String>,
        max_tokens: usize,
    ) -> Result<Self, ScoringError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| backend_err(model_id, &format!("http client: {e}")))?;
        Ok(Self {
            model_id: model_id.to_string(),
            url: format!("{}/{}", base_url.trim_end_matches('/'), model_id),
            api_token,
            max_tokens,
            client,
        })
    }

    fn request(&self, text: &str) -> Result<String, ScoringError> {
        let mut req = self
            .client
            .post(&self.url)
            .json(&serde_json::json!({ "inputs": text }));
        if let Some(token) = &self.api_token {
            req = req.bearer_auth(token);
        }
        let response = req
            .send()
            .map_err(|e| backend_err(&self.model_id, &format!("request failed: {e}")))?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| backend_err(&self.model_id, &format!("response read failed: {e}")))?;
        if !status.is_success() {
            return Err(backend_err(
                &self.model_id,
                &format!("endpoint returned {status}: {body}"),
            ));
        }
        Ok(body)
    }
}

fn backend_err(model_id: &str, message: &str) -> ScoringError {
    ScoringError::Backend {
        backend: format!("transformer:{model_id}"),
        message: message.to_string(),
    }
}

/// Parse a classification response body into a distribution. Accepts either
/// a flat list of label/score pairs or the single-input nested form.
pub fn parse_classification_response(
    body: &str,
    model_id: &str,
) -> Result<LabelDistribution, ScoringError> {
    let scores: Vec<LabelScore> = serde_json::from_str::<Vec<Vec<LabelScore>>>(body)
        .map(|mut nested| if nested.is_empty() { Vec::new() } else { nested.swap_remove(0) })
        .or_else(|_| serde_json::from_str::<Vec<LabelScore>>(body))
        .map_err(|e| backend_err(model_id, &format!("unrecognized response shape: {e}; body: {body}")))?;

    let mut p = [0.0f64; STAR_CLASSES];
    let mut seen = [false; STAR_CLASSES];
    for entry in &scores {
        let star = parse_star_label(&entry.label).ok_or_else(|| {
            backend_err(model_id, &format!("unrecognized label {:?}", entry.label))
        })?;
        let idx = star - 1;
        if seen[idx] {
            return Err(backend_err(
                model_id,
                &format!("duplicate label {:?}", entry.label),
            ));
        }
        seen[idx] = true;
        p[idx] = entry.score;
    }
    if !seen.iter().all(|&s| s) {
        return Err(backend_err(
            model_id,
            &format!("response does not cover all five classes: {body}"),
        ));
    }
    // scores from the endpoint carry limited precision; renormalize
    let sum: f64 = p.iter().sum();
    if sum <= 0.0 {
        return Err(backend_err(model_id, "all class scores are zero"));
    }
    for v in &mut p {
        *v /= sum;
    }
    LabelDistribution::new(p)
}

/// Extract the star number from labels like `"2 stars"`, `"5 stars"`,
/// `"1 star"` or `"LABEL_0"`..`"LABEL_4"` (zero-based class ids).
fn parse_star_label(label: &str) -> Option<usize> {
    let label = label.trim();
    if let Some(rest) = label.strip_prefix("LABEL_") {
        let class: usize = rest.parse().ok()?;
        return (class < STAR_CLASSES).then_some(class + 1);
    }
    let first = label.split_whitespace().next()?;
    let star: usize = first.parse().ok()?;
    (1..=STAR_CLASSES).contains(&star).then_some(star)
}

impl ScoringBackend for TransformerBackend {
    fn classify(&self, text: &str) -> Result<LabelDistribution, ScoringError> {
        let body = self.request(text)?;
        parse_classification_response(&body, &self.model_id)
    }

    fn count_tokens(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn name(&self) -> &str {
        &self.model_id
    }
}
