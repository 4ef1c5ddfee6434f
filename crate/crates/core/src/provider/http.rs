//! OpenAI-compatible `/v1/completions` scoring with `echo` and `logprobs`.
//!
//! The prompt is `context + separator + target`, sent with `max_tokens = 0`
//! so the server only echoes the prompt tokens with their logprobs. The
//! target span is found from the echoed `text_offset` values: it starts at
//! the last token whose offset is at or before the first target character.
//! When that token also covers the end of the context it is kept in the span.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{LogprobProvider, ProviderError, ScoreResult};

fn default_max_parallel() -> usize {
    4
}

fn default_timeout_secs() -> f64 {
    60.0
}

fn default_retry_budget() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    250
}

/// Where and how to reach one scoring model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderEndpoint {
    pub base_url: String,
    pub model_name: String,
    /// Never serialized; supplied from the environment.
    #[serde(skip)]
    pub auth_token: Option<String>,
    #[serde(default = "default_max_parallel")]
    pub max_parallel: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: u32,
    /// Base delay of the exponential backoff between retries.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Inserted between context and target when building the prompt.
    #[serde(default)]
    pub separator: String,
}

impl ProviderEndpoint {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            auth_token: None,
            max_parallel: default_max_parallel(),
            timeout_secs: default_timeout_secs(),
            retry_budget: default_retry_budget(),
            backoff_ms: default_backoff_ms(),
            separator: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_parallel == 0 {
            return Err("max_parallel must be at least 1".into());
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err("timeout must be positive".into());
        }
        if self.base_url.is_empty() {
            return Err("base_url is empty".into());
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn completions_url(&self) -> String {
        format!("{}/v1/completions", self.base_url.trim_end_matches('/'))
    }

    pub fn provider_id(&self) -> String {
        self.base_url.trim_end_matches('/').to_string()
    }
}

/// Request body for echo scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub max_tokens: u32,
    pub echo: bool,
    pub logprobs: u32,
}

impl CompletionRequest {
    pub fn scoring(model: &str, prompt: String) -> Self {
        Self {
            model: model.to_string(),
            prompt,
            max_tokens: 0,
            echo: true,
            logprobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal blocking JSON POST; `Err` means no HTTP response was obtained.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        auth_token: Option<&str>,
        body: &str,
    ) -> Result<HttpResponse, String>;
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn post_json(
        &self,
        url: &str,
        auth_token: Option<&str>,
        body: &str,
    ) -> Result<HttpResponse, String> {
        (**self).post_json(url, auth_token, body)
    }
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        auth_token: Option<&str>,
        body: &str,
    ) -> Result<HttpResponse, String> {
        let mut req = self
            .agent
            .post(url)
            .header("Content-Type", "application/json");
        if let Some(token) = auth_token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Character offset of the first target character inside the prompt.
pub fn target_char_offset(context: &str, separator: &str) -> usize {
    context.chars().count() + separator.chars().count()
}

/// Extracts target-span logprobs from an echo completion response body.
///
/// Returns `(token_texts, token_logprobs)`. Tokens at or beyond the prompt
/// end (anything the server generated) are ignored.
pub fn parse_completion_response(
    body: &str,
    prompt_chars: usize,
    target_start: usize,
) -> Result<(Vec<String>, Vec<f64>), ProviderError> {
    let malformed = |m: &str| ProviderError::MalformedResponse(m.to_string());
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(&e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .ok_or_else(|| malformed("missing choices[0]"))?;
    let logprobs = match choice.get("logprobs") {
        None | Some(Value::Null) => return Err(ProviderError::NoLogprobSupport),
        Some(lp) => lp,
    };
    let array = |field: &str| {
        logprobs
            .get(field)
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(&format!("missing logprobs.{field}")))
    };
    let tokens = array("tokens")?;
    let token_logprobs = array("token_logprobs")?;
    let offsets = array("text_offset")?;
    if tokens.len() != token_logprobs.len() || tokens.len() != offsets.len() {
        return Err(malformed("tokens, token_logprobs and text_offset differ in length"));
    }

    let mut rows = Vec::with_capacity(tokens.len());
    for ((tok, lp), off) in tokens.iter().zip(token_logprobs).zip(offsets) {
        let text = tok
            .as_str()
            .ok_or_else(|| malformed("non-string token"))?
            .to_string();
        let offset = off
            .as_u64()
            .ok_or_else(|| malformed("non-integer text_offset"))? as usize;
        let logprob = match lp {
            Value::Null => None,
            other => Some(
                other
                    .as_f64()
                    .ok_or_else(|| malformed("non-numeric token logprob"))?,
            ),
        };
        if offset >= prompt_chars {
            break;
        }
        rows.push((text, offset, logprob));
    }

    let start = match rows.iter().rposition(|(_, off, _)| *off <= target_start) {
        Some(i) => i,
        None => return Err(ProviderError::ZeroTokenTarget),
    };
    if rows[start].1 != target_start {
        tracing::debug!(
            offset = rows[start].1,
            target_start,
            "target does not begin on a token boundary; boundary token kept in span"
        );
    }

    let mut texts = Vec::new();
    let mut lps = Vec::new();
    for (index, (text, _, lp)) in rows.into_iter().skip(start).enumerate() {
        let lp = lp.ok_or(ProviderError::MissingLogprob { index })?;
        texts.push(text);
        lps.push(lp);
    }
    if lps.is_empty() {
        return Err(ProviderError::ZeroTokenTarget);
    }
    Ok((texts, lps))
}

/// Completions-endpoint provider with retry on transport errors and 5xx.
pub struct HttpProvider {
    endpoint: ProviderEndpoint,
    provider_id: String,
    transport: Box<dyn Transport>,
}

impl HttpProvider {
    pub fn new(endpoint: ProviderEndpoint) -> Result<Self, String> {
        let transport = UreqTransport::new(endpoint.timeout());
        Self::with_transport(endpoint, Box::new(transport))
    }

    pub fn with_transport(
        endpoint: ProviderEndpoint,
        transport: Box<dyn Transport>,
    ) -> Result<Self, String> {
        endpoint.validate()?;
        Ok(Self {
            provider_id: endpoint.provider_id(),
            endpoint,
            transport,
        })
    }

    pub fn endpoint(&self) -> &ProviderEndpoint {
        &self.endpoint
    }

    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.endpoint.backoff_ms.saturating_mul(1 << attempt.min(16)))
    }

    fn post_with_retry(&self, body: &str) -> Result<String, ProviderError> {
        let url = self.endpoint.completions_url();
        let attempts = self.endpoint.retry_budget as usize + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt as u32 - 1));
            }
            let err = match self
                .transport
                .post_json(&url, self.endpoint.auth_token.as_deref(), body)
            {
                Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp.body),
                Ok(resp) => ProviderError::Http {
                    status: resp.status,
                    body: resp.body,
                },
                Err(message) => ProviderError::Transport {
                    attempts: attempt + 1,
                    message,
                },
            };
            if !err.is_transient() {
                return Err(err);
            }
            tracing::warn!(attempt = attempt + 1, %url, "retrying: {err}");
            last = Some(err);
        }
        Err(match last {
            Some(ProviderError::Transport { message, .. }) => {
                ProviderError::Transport { attempts, message }
            }
            Some(other) => other,
            None => unreachable!("at least one attempt is made"),
        })
    }
}

impl LogprobProvider for HttpProvider {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn model_name(&self) -> &str {
        &self.endpoint.model_name
    }

    fn max_parallel(&self) -> usize {
        self.endpoint.max_parallel
    }

    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError> {
        if target.is_empty() {
            return Err(ProviderError::ZeroTokenTarget);
        }
        let sep = &self.endpoint.separator;
        let prompt = format!("{context}{sep}{target}");
        let request = CompletionRequest::scoring(&self.endpoint.model_name, prompt);
        let body = serde_json::to_string(&request).expect("request serializes");
        let response = self.post_with_retry(&body)?;
        let prompt_chars = request.prompt.chars().count();
        let (texts, lps) =
            parse_completion_response(&response, prompt_chars, target_char_offset(context, sep))?;
        ScoreResult::new(&self.provider_id, context, target, lps, texts)
    }
}
