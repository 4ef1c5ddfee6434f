//! Deterministic in-process providers.
//!
//! Both tokenize one character per token.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use super::{LogprobProvider, ProviderError, ScoreResult};
use crate::oracle::{LogProb, ToyModel};

fn char_tokens(text: &str) -> Vec<String> {
    text.chars().map(String::from).collect()
}

/// Provider returning planted logprobs, with request instrumentation.
pub struct StubProvider {
    id: String,
    model: String,
    max_parallel: usize,
    default_per_token: Option<f64>,
    planted: HashMap<(String, String), Vec<f64>>,
    failing_targets: HashSet<String>,
    unreachable: bool,
    latency: Duration,
    requests: AtomicUsize,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
}

impl StubProvider {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            model: "stub".into(),
            max_parallel: 1,
            default_per_token: None,
            planted: HashMap::new(),
            failing_targets: HashSet::new(),
            unreachable: false,
            latency: Duration::ZERO,
            requests: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak_in_flight: AtomicUsize::new(0),
        }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    pub fn with_max_parallel(mut self, k: usize) -> Self {
        self.max_parallel = k.max(1);
        self
    }

    /// Per-token logprob for any (context, target) not planted explicitly.
    pub fn with_default(mut self, per_token: f64) -> Self {
        self.default_per_token = Some(per_token);
        self
    }

    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Every request fails with [`ProviderError::Unreachable`].
    pub fn unreachable(mut self) -> Self {
        self.unreachable = true;
        self
    }

    pub fn fail_on_target(mut self, target: impl Into<String>) -> Self {
        self.failing_targets.insert(target.into());
        self
    }

    /// Plants the same logprob on every token of `target` after `context`.
    pub fn plant_per_token(&mut self, context: &str, target: &str, per_token: f64) {
        let n = target.chars().count();
        self.planted
            .insert((context.into(), target.into()), vec![per_token; n]);
    }

    /// Plants logprobs summing to `total`, spread evenly over the tokens.
    pub fn plant_total(&mut self, context: &str, target: &str, total: f64) {
        let n = target.chars().count().max(1);
        self.plant_per_token(context, target, total / n as f64);
    }

    pub fn plant_tokens(&mut self, context: &str, target: &str, logprobs: Vec<f64>) {
        self.planted.insert((context.into(), target.into()), logprobs);
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }
}

struct InFlight<'a>(&'a AtomicUsize);

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

impl LogprobProvider for StubProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn model_name(&self) -> &str {
        &self.model
    }

    fn max_parallel(&self) -> usize {
        self.max_parallel
    }

    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        let _guard = InFlight(&self.in_flight);
        self.peak_in_flight.fetch_max(now, Ordering::SeqCst);
        if !self.latency.is_zero() {
            std::thread::sleep(self.latency);
        }

        if self.unreachable {
            return Err(ProviderError::Unreachable(self.id.clone()));
        }
        if target.is_empty() {
            return Err(ProviderError::ZeroTokenTarget);
        }
        if self.failing_targets.contains(target) {
            return Err(ProviderError::Transport {
                attempts: 1,
                message: format!("planted failure for {target:?}"),
            });
        }
        let logprobs = match self.planted.get(&(context.to_string(), target.to_string())) {
            Some(lps) => lps.clone(),
            None => match self.default_per_token {
                Some(v) => vec![v; target.chars().count()],
                None => {
                    return Err(ProviderError::Unplanted {
                        context: context.into(),
                        target: target.into(),
                    })
                }
            },
        };
        let texts = char_tokens(target);
        ScoreResult::new(&self.id, context, target, logprobs, texts)
    }
}

/// Provider reading exact conditionals from a [`ToyModel`].
pub struct OracleProvider {
    id: String,
    model_name: String,
    model: ToyModel,
}

impl OracleProvider {
    pub fn new(id: impl Into<String>, model: ToyModel) -> Self {
        Self {
            id: id.into(),
            model_name: "toy-oracle".into(),
            model,
        }
    }

    pub fn model(&self) -> &ToyModel {
        &self.model
    }
}

impl LogprobProvider for OracleProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn max_parallel(&self) -> usize {
        8
    }

    fn score_target(&self, context: &str, target: &str) -> Result<ScoreResult, ProviderError> {
        if target.is_empty() {
            return Err(ProviderError::ZeroTokenTarget);
        }
        let steps = self.model.continuation_logprobs(context, target)?;
        let logprobs = steps
            .into_iter()
            .map(|s| match s {
                LogProb::Finite(v) => Ok(v),
                LogProb::Impossible => Err(ProviderError::ImpossibleTarget(target.into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        ScoreResult::new(&self.id, context, target, logprobs, char_tokens(target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::unconditional_score;
    use std::collections::BTreeMap;

    #[test]
    fn stub_planted_per_token() {
        let stub = StubProvider::new("s").with_default(-1.0);
        let r = stub.score_target("ctx", "ab").unwrap();
        assert_eq!(r.token_logprobs, vec![-1.0, -1.0]);
        assert_eq!(r.token_texts, vec!["a", "b"]);
        assert_eq!(r.token_count, 2);
    }

    #[test]
    fn stub_empty_target_errors() {
        let stub = StubProvider::new("s").with_default(-1.0);
        let err = stub.score_target("ctx", "").unwrap_err();
        assert_eq!(err.to_string(), "zero-token target");
    }

    #[test]
    fn unconditional_uses_null_context() {
        let mut stub = StubProvider::new("s");
        stub.plant_total("", "ab", -6.0);
        stub.plant_total("neutral prompt", "ab", -5.0);
        stub.plant_total("ctx", "ab", -2.0);
        assert_eq!(unconditional_score(&stub, "ab", "").unwrap().total(), -6.0);
        assert_eq!(
            unconditional_score(&stub, "ab", "").unwrap(),
            stub.score_target("", "ab").unwrap()
        );
        let neutral = unconditional_score(&stub, "ab", "neutral prompt").unwrap();
        assert_eq!(neutral.total(), -5.0);
        assert_eq!(neutral.context_hash, crate::provider::digest("neutral prompt"));
        assert_ne!(neutral.total(), stub.score_target("ctx", "ab").unwrap().total());
    }

    #[test]
    fn oracle_reads_conditional_table() {
        let mut c = BTreeMap::new();
        c.insert(String::new(), vec![0.5, 0.5]);
        c.insert("a".into(), vec![0.75, 0.25]);
        c.insert("b".into(), vec![0.5, 0.5]);
        let m = ToyModel::new(vec!['a', 'b'], c, 2).unwrap();
        let p = OracleProvider::new("o", m);
        let r = p.score_target("a", "b").unwrap();
        assert_eq!(r.token_logprobs.len(), 1);
        assert!((r.token_logprobs[0] - (-1.3863)).abs() < 1e-4);
        assert_eq!(r.token_logprobs[0], 0.25f64.ln());
    }

    #[test]
    fn oracle_impossible_target() {
        let mut c = BTreeMap::new();
        c.insert(String::new(), vec![1.0, 0.0]);
        c.insert("a".into(), vec![0.5, 0.5]);
        let m = ToyModel::new(vec!['a', 'b'], c, 2).unwrap();
        let p = OracleProvider::new("o", m);
        assert!(matches!(p.score_target("", "b"), Err(ProviderError::ImpossibleTarget(_))));
    }

    #[test]
    fn unreachable_and_failing() {
        let s = StubProvider::new("s").with_default(-1.0).unreachable();
        assert!(matches!(s.score_target("", "a"), Err(ProviderError::Unreachable(_))));
        let s = StubProvider::new("s").with_default(-1.0).fail_on_target("x");
        assert!(s.score_target("", "x").is_err());
        assert!(s.score_target("", "y").is_ok());
        assert!(matches!(
            StubProvider::new("s").score_target("", "y"),
            Err(ProviderError::Unplanted { .. })
        ));
    }
}
