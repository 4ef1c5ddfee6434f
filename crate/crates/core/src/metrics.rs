//! Scalar metrics computed from [`ScoreResult`]s.
//!
//! The per-option estimator is pointwise mutual information,
//! `i(x; y) = log P(x | y) − log P(x)`, where the unconditional term is read
//! under the configured null context. All values are nats unless a function
//! says otherwise.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::PairedItem;
use crate::oracle::{check_distribution, OracleError, DIST_TOLERANCE};
use crate::provider::{unconditional_score, LogprobProvider, ProviderError, ScoreResult};

/// Recorded in run metadata so readers know which estimator produced ΔI.
pub const ESTIMATOR_NOTE: &str =
    "per-option I = log P(option | context) - log P(option | null context) (pointwise MI)";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("score results are for different targets")]
    TargetMismatch,
    #[error("token counts differ ({left} vs {right})")]
    TokenCountMismatch { left: usize, right: usize },
    #[error("item mismatch: {left:?} vs {right:?}")]
    ItemMismatch { left: String, right: String },
    #[error("normalization mismatch for item {0:?}")]
    NormalizationMismatch(String),
    #[error("need at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("correct candidate {0:?} not among candidates")]
    MissingCandidate(String),
    #[error("distributions differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(#[from] OracleError),
    #[error("item {item_id}: {source}")]
    Provider {
        item_id: String,
        #[source]
        source: ProviderError,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Summed over target tokens.
    #[default]
    Total,
    /// Divided by the target's token count.
    PerToken,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Total => "total",
            Normalization::PerToken => "per_token",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

impl Unit {
    /// Converts a value held in nats into this unit.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats_to_bits(nats),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        })
    }
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

/// `log P(x | y) − log P(x)` from a conditional and an unconditional score
/// of the same target.
pub fn pointwise_mi(
    cond: &ScoreResult,
    uncond: &ScoreResult,
    normalization: Normalization,
) -> Result<f64, MetricsError> {
    if cond.target_hash != uncond.target_hash {
        return Err(MetricsError::TargetMismatch);
    }
    let diff = cond.total() - uncond.total();
    match normalization {
        Normalization::Total => Ok(diff),
        Normalization::PerToken => {
            if cond.token_count != uncond.token_count {
                return Err(MetricsError::TokenCountMismatch {
                    left: cond.token_count,
                    right: uncond.token_count,
                });
            }
            Ok(diff / cond.token_count as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedMetrics {
    pub item_id: String,
    pub i_good: f64,
    pub i_bad: f64,
    pub delta_i: f64,
    pub normalization: Normalization,
}

impl PairedMetrics {
    pub fn new(item_id: impl Into<String>, i_good: f64, i_bad: f64, normalization: Normalization) -> Self {
        Self {
            item_id: item_id.into(),
            i_good,
            i_bad,
            delta_i: i_good - i_bad,
            normalization,
        }
    }
}

/// ΔI of one paired item under one provider: pointwise MI of the good option
/// minus that of the bad option.
pub fn paired_delta_i<P: LogprobProvider + ?Sized>(
    item: &PairedItem,
    provider: &P,
    null_context: &str,
    normalization: Normalization,
) -> Result<PairedMetrics, MetricsError> {
    let wrap = |source| MetricsError::Provider {
        item_id: item.id.clone(),
        source,
    };
    let mi = |option: &str| -> Result<f64, MetricsError> {
        let cond = provider.score_target(&item.context, option).map_err(wrap)?;
        let uncond = unconditional_score(provider, option, null_context).map_err(wrap)?;
        pointwise_mi(&cond, &uncond, normalization)
    };
    let i_good = mi(&item.option_good)?;
    let i_bad = mi(&item.option_bad)?;
    Ok(PairedMetrics::new(&item.id, i_good, i_bad, normalization))
}

/// Δ(ΔI) for one item: tuned ΔI minus base ΔI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaDeltaI {
    pub item_id: String,
    pub delta_i_base: f64,
    pub delta_i_tuned: f64,
    pub value: f64,
}

pub fn delta_delta_i(base: &PairedMetrics, tuned: &PairedMetrics) -> Result<DeltaDeltaI, MetricsError> {
    if base.item_id != tuned.item_id {
        return Err(MetricsError::ItemMismatch {
            left: base.item_id.clone(),
            right: tuned.item_id.clone(),
        });
    }
    if base.normalization != tuned.normalization {
        return Err(MetricsError::NormalizationMismatch(base.item_id.clone()));
    }
    Ok(DeltaDeltaI {
        item_id: base.item_id.clone(),
        delta_i_base: base.delta_i,
        delta_i_tuned: tuned.delta_i,
        value: tuned.delta_i - base.delta_i,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationMetrics {
    pub item_id: String,
    pub mean_logp_per_token: f64,
    pub token_count: usize,
    pub unit: Unit,
}

pub fn continuation_metrics(item_id: &str, score: &ScoreResult, unit: Unit) -> ContinuationMetrics {
    ContinuationMetrics {
        item_id: item_id.to_string(),
        mean_logp_per_token: unit.from_nats(score.mean_per_token()),
        token_count: score.token_count,
        unit,
    }
}

/// `(Σ tuned − Σ base) / token_count`; both must tokenize the target the same.
pub fn per_token_delta_logp(base: &ScoreResult, tuned: &ScoreResult) -> Result<f64, MetricsError> {
    if base.target_hash != tuned.target_hash {
        return Err(MetricsError::TargetMismatch);
    }
    if base.token_count != tuned.token_count {
        return Err(MetricsError::TokenCountMismatch {
            left: base.token_count,
            right: tuned.token_count,
        });
    }
    Ok((tuned.total() - base.total()) / base.token_count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankOutcome {
    /// 1 is best.
    pub rank: usize,
    /// Another candidate has exactly the same score.
    pub tied: bool,
}

/// Rank of `correct_id` by descending score; ties share the best rank.
pub fn rank_of_correct(scores: &[(String, f64)], correct_id: &str) -> Result<RankOutcome, MetricsError> {
    if scores.len() < 2 {
        return Err(MetricsError::TooFewCandidates(scores.len()));
    }
    let idx = scores
        .iter()
        .position(|(id, _)| id == correct_id)
        .ok_or_else(|| MetricsError::MissingCandidate(correct_id.to_string()))?;
    let target = scores[idx].1;
    let better = scores.iter().filter(|(_, s)| *s > target).count();
    let tied = scores
        .iter()
        .enumerate()
        .any(|(i, (_, s))| i != idx && *s == target);
    Ok(RankOutcome {
        rank: better + 1,
        tied,
    })
}

/// KL divergence; `Infinite` when q has no mass where p does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn finite(self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(v),
            Divergence::Infinite => None,
        }
    }
}

impl PartialOrd for Divergence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Divergence::Finite(a), Divergence::Finite(b)) => a.partial_cmp(b),
            (Divergence::Finite(_), Divergence::Infinite) => Some(Ordering::Less),
            (Divergence::Infinite, Divergence::Finite(_)) => Some(Ordering::Greater),
            (Divergence::Infinite, Divergence::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::Finite(v) => write!(f, "{v:.6}"),
            Divergence::Infinite => f.write_str("inf"),
        }
    }
}

/// D_KL(p ‖ q) = Σ p ln(p / q) with 0 ln(0 / q) = 0.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<Divergence, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    check_distribution(p, DIST_TOLERANCE)?;
    check_distribution(q, DIST_TOLERANCE)?;
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(Divergence::Infinite);
        }
        total += pi * (pi / qi).ln();
    }
    Ok(Divergence::Finite(total.max(0.0)))
}

/// A decision point with the expert's and the pretrained model's
/// distributions over the same candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub id: String,
    pub expert: Vec<f64>,
    pub pretrained: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPoint {
    pub id: String,
    pub kl: Divergence,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrescreenOutcome {
    pub ranked: Vec<RankedPoint>,
    pub warnings: Vec<String>,
}

/// Orders decision points by descending KL(expert ‖ pretrained). The sort is
/// stable; infinite divergences rank first. Invalid points are dropped with
/// a warning.
pub fn prescreen_rank(points: &[DecisionPoint]) -> PrescreenOutcome {
    let mut out = PrescreenOutcome::default();
    for point in points {
        match kl_divergence(&point.expert, &point.pretrained) {
            Ok(kl) => out.ranked.push(RankedPoint {
                id: point.id.clone(),
                kl,
            }),
            Err(e) => {
                tracing::warn!("prescreen: excluding {:?}: {e}", point.id);
                out.warnings.push(format!("{}: {e}", point.id));
            }
        }
    }
    out.ranked
        .sort_by(|a, b| b.kl.partial_cmp(&a.kl).unwrap_or(Ordering::Equal));
    out
}
