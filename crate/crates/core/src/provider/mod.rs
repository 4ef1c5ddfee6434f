//! Per-token logprob scoring of a target text under a context.
//!
//! Every backend implements [`LogprobProvider`]. Logprobs are natural-log
//! (nats) throughout; conversion to bits happens only when reporting.

mod cache;
mod http;
mod stub;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::oracle::OracleError;

pub use cache::{cached_score, CacheKey, CachedProvider, ScoreCache};
pub use http::{
    parse_completion_response, target_char_offset, CompletionRequest, HttpProvider,
    HttpResponse, ProviderEndpoint, Transport, UreqTransport,
};
pub use stub::{OracleProvider, StubProvider};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("zero-token target")]
    ZeroTokenTarget,
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("HTTP {status} from endpoint: {body}")]
    Http { status: u16, body: String },
    #[error("endpoint response carries no logprobs (logprob scoring unsupported?)")]
    NoLogprobSupport,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no logprob for target token {index}; the target starts the prompt, so set a non-empty null context")]
    MissingLogprob { index: usize },
    #[error("target {0:?} has zero probability under the model")]
    ImpossibleTarget(String),
    #[error("no planted score for context {context:?} / target {target:?}")]
    Unplanted { context: String, target: String },
    #[error("provider {0} is unreachable")]
    Unreachable(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cache I/O: {0}")]
    Cache(#[from] std::io::Error),
}

impl ProviderError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transport { .. })
            || matches!(self, ProviderError::Http { status, .. } if *status >= 500)
    }
}

/// Hex SHA-256 of a text; used to key cached scores.
pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Logprobs of the target-span tokens under one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub token_logprobs: Vec<f64>,
    pub token_texts: Vec<String>,
    pub token_count: usize,
    pub provider_id: String,
    pub context_hash: String,
    pub target_hash: String,
}

impl ScoreResult {
    pub fn new(
        provider_id: &str,
        context: &str,
        target: &str,
        token_logprobs: Vec<f64>,
        token_texts: Vec<String>,
    ) -> Result<Self, ProviderError> {
        if token_logprobs.is_empty() {
            return Err(ProviderError::ZeroTokenTarget);
        }
        if token_logprobs.len() != token_texts.len() {
            return Err(ProviderError::MalformedResponse(format!(
                "{} logprobs for {} tokens",
                token_logprobs.len(),
                token_texts.len()
            )));
        }
        Ok(Self {
            token_count: token_logprobs.len(),
            token_logprobs,
            token_texts,
            provider_id: provider_id.to_string(),
            context_hash: digest(context),
            target_hash: digest(target),
        })
    }

    pub fn total(&self) -> f64 {
        self.token_logprobs.iter().sum()
    }

    pub fn mean_per_token(&self) -> f64 {
        self.total() / self.token_count as f64
    }
}

/// Source of per-token logprobs.
pub trait LogprobProvider: Send + Sync {
    fn provider_id(&self) -> &str;

    fn model_name(&self) -> &str;

    /// Upper bound on concurrent `score_target` calls.
    fn max_parallel(&self) -> usize {
        1
    }

    /// Logprobs of exactly the target-span tokens; context tokens excluded.
    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError>;
}

/// Scores `target` under the configured null context (the unconditional
/// reading of log P(x)).
pub fn unconditional_score<P: LogprobProvider + ?Sized>(
    provider: &P,
    target: &str,
    null_context: &str,
) -> Result<ScoreResult, ProviderError> {
    provider.score_target(null_context, target)
}

impl<P: LogprobProvider + ?Sized> LogprobProvider for &P {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn max_parallel(&self) -> usize {
        (**self).max_parallel()
    }
    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError> {
        (**self).score_target(context, target)
    }
}

impl<P: LogprobProvider + ?Sized> LogprobProvider for Arc<P> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn max_parallel(&self) -> usize {
        (**self).max_parallel()
    }
    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError> {
        (**self).score_target(context, target)
    }
}

impl<P: LogprobProvider + ?Sized> LogprobProvider for Box<P> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn max_parallel(&self) -> usize {
        (**self).max_parallel()
    }
    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError> {
        (**self).score_target(context, target)
    }
}
