//! Context-sensitivity evaluation for autoregressive language models.
//!
//! The harness reads per-token logprobs from a scoring endpoint and turns
//! them into paired pointwise-mutual-information gaps, per-token logprob
//! deltas, and paired statistics across checkpoints. Exact toy models in
//! [`oracle`] provide ground truth for every estimator.

pub mod dataset;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod provider;
pub mod report;
pub mod stats;
pub mod synthetic;
