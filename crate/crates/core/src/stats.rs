//! Paired statistics over per-item differences.
//!
//! Wilcoxon signed-rank drops zero differences and gives tied magnitudes
//! their average rank. Up to [`EXACT_MAX_N`] nonzero differences the null
//! distribution of W+ is computed exactly (every sign assignment counted);
//! above that a tie-corrected normal approximation with continuity
//! correction is used. Cohen's d is the paired d_z = mean / sd of the
//! differences, so `t = d · √n`.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

/// Largest effective n handled by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

/// Recorded alongside every summary.
pub const EFFECT_SIZE_VARIANT: &str = "d_z (mean / sd of paired differences)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("degenerate: no signal (all differences are zero)")]
    NoSignal,
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("non-finite value in input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Median / mean of the differences is above zero.
    Greater,
    Less,
    TwoSided,
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::Greater => "greater",
            Alternative::Less => "less",
            Alternative::TwoSided => "two-sided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub statistic: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
    pub n_effective: usize,
    pub n_zero: usize,
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Nonzero differences ranked by magnitude, ties averaged. Ranks are
/// returned doubled so they are always integers.
struct SignedRanks {
    doubled: Vec<u64>,
    positive: Vec<bool>,
    tie_sizes: Vec<usize>,
    n_zero: usize,
}

impl SignedRanks {
    fn new(diffs: &[f64]) -> Result<Self, StatsError> {
        if diffs.is_empty() {
            return Err(StatsError::Empty);
        }
        check_finite(diffs)?;
        let mut nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        let n_zero = diffs.len() - nonzero.len();
        if nonzero.is_empty() {
            return Err(StatsError::NoSignal);
        }
        nonzero.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

        let n = nonzero.len();
        let mut doubled = vec![0u64; n];
        let mut tie_sizes = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && nonzero[j + 1].abs() == nonzero[i].abs() {
                j += 1;
            }
            // Ranks i+1..=j+1 averaged, doubled: (i+1) + (j+1).
            let r2 = (i + 1 + j + 1) as u64;
            for slot in &mut doubled[i..=j] {
                *slot = r2;
            }
            tie_sizes.push(j - i + 1);
            i = j + 1;
        }
        Ok(Self {
            doubled,
            positive: nonzero.iter().map(|d| *d > 0.0).collect(),
            tie_sizes,
            n_zero,
        })
    }

    fn n(&self) -> usize {
        self.doubled.len()
    }

    fn doubled_statistic(&self) -> u64 {
        self.doubled
            .iter()
            .zip(&self.positive)
            .filter(|(_, &p)| p)
            .map(|(r, _)| *r)
            .sum()
    }
}

/// Signed-rank test, exact when the effective n is at most [`EXACT_MAX_N`].
pub fn wilcoxon_signed_rank(diffs: &[f64], alternative: Alternative) -> Result<WilcoxonResult, StatsError> {
    let ranks = SignedRanks::new(diffs)?;
    if ranks.n() <= EXACT_MAX_N {
        Ok(exact_from_ranks(&ranks, alternative))
    } else {
        Ok(normal_from_ranks(&ranks, alternative))
    }
}

/// Exact null distribution regardless of n. Cost grows as n³.
pub fn wilcoxon_exact(diffs: &[f64], alternative: Alternative) -> Result<WilcoxonResult, StatsError> {
    Ok(exact_from_ranks(&SignedRanks::new(diffs)?, alternative))
}

pub fn wilcoxon_normal(diffs: &[f64], alternative: Alternative) -> Result<WilcoxonResult, StatsError> {
    Ok(normal_from_ranks(&SignedRanks::new(diffs)?, alternative))
}

fn exact_from_ranks(ranks: &SignedRanks, alternative: Alternative) -> WilcoxonResult {
    // counts[s] = number of sign assignments whose doubled W+ equals s.
    let total: u64 = ranks.doubled.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in &ranks.doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let w = ranks.doubled_statistic() as usize;
    let all = 2f64.powi(ranks.n() as i32);
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let p_value = match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    };
    WilcoxonResult {
        statistic: w as f64 / 2.0,
        p_value,
        method: WilcoxonMethod::Exact,
        n_effective: ranks.n(),
        n_zero: ranks.n_zero,
    }
}

fn normal_from_ranks(ranks: &SignedRanks, alternative: Alternative) -> WilcoxonResult {
    let n = ranks.n() as f64;
    let w = ranks.doubled_statistic() as f64 / 2.0;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = ranks
        .tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let sd = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term).sqrt();
    let std_normal = Normal::standard();
    let p_value = match alternative {
        Alternative::Greater => std_normal.sf((w - mean - 0.5) / sd),
        Alternative::Less => std_normal.cdf((w - mean + 0.5) / sd),
        Alternative::TwoSided => {
            let z = ((w - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * std_normal.sf(z)).min(1.0)
        }
    };
    WilcoxonResult {
        statistic: w,
        p_value: p_value.clamp(0.0, 1.0),
        method: WilcoxonMethod::NormalApprox,
        n_effective: ranks.n(),
        n_zero: ranks.n_zero,
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

fn moments(values: &[f64]) -> Result<(f64, f64), StatsError> {
    check_finite(values)?;
    if values.len() < 2 {
        return Err(StatsError::TooFew {
            need: 2,
            got: values.len(),
        });
    }
    let sd = sample_sd(values);
    if sd == 0.0 || values.iter().all(|v| *v == values[0]) {
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean(values), sd))
}

/// Paired Cohen's d_z.
pub fn cohens_d_paired(diffs: &[f64]) -> Result<f64, StatsError> {
    let (m, sd) = moments(diffs)?;
    Ok(m / sd)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub p_value: f64,
    pub df: f64,
}

fn students_t(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("df >= 1")
}

/// One-sample t-test on paired differences against zero.
pub fn paired_t_test(diffs: &[f64], alternative: Alternative) -> Result<TTestResult, StatsError> {
    let d = cohens_d_paired(diffs)?;
    let n = diffs.len() as f64;
    let t = d * n.sqrt();
    let df = n - 1.0;
    let dist = students_t(df);
    let p_value = match alternative {
        Alternative::Greater => dist.sf(t),
        Alternative::Less => dist.cdf(t),
        Alternative::TwoSided => (2.0 * dist.sf(t.abs())).min(1.0),
    };
    Ok(TTestResult { t, p_value, df })
}

/// Upper `prob` quantile of Student t, refined by Newton steps on the CDF.
pub fn t_quantile(prob: f64, df: f64) -> f64 {
    let dist = students_t(df);
    let mut x = dist.inverse_cdf(prob);
    for _ in 0..8 {
        let err = dist.cdf(x) - prob;
        let dens = statrs::distribution::Continuous::pdf(&dist, x);
        if dens <= 0.0 || err.abs() < 1e-16 {
            break;
        }
        x -= err / dens;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    /// True when the values had zero spread and the interval is a point.
    pub degenerate: bool,
}

/// mean ± t₀.₉₇₅,ₙ₋₁ · sd / √n.
pub fn ci95_mean(values: &[f64]) -> Result<ConfidenceInterval, StatsError> {
    match moments(values) {
        Ok((m, sd)) => {
            let n = values.len() as f64;
            let half = t_quantile(0.975, n - 1.0) * sd / n.sqrt();
            Ok(ConfidenceInterval {
                low: m - half,
                high: m + half,
                degenerate: false,
            })
        }
        Err(StatsError::ZeroVariance) => Ok(ConfidenceInterval {
            low: values[0],
            high: values[0],
            degenerate: true,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatFlag {
    /// Every difference is zero; the signed-rank test is undefined.
    NoSignal,
    /// Differences have zero spread; t, d and the CI are undefined.
    ZeroVariance,
    /// Fewer than two observations.
    TooFewObservations,
}

/// All paired statistics for one set of differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub n: usize,
    pub n_effective: usize,
    pub mean_diff: f64,
    pub alternative: Alternative,
    pub wilcoxon_statistic: Option<f64>,
    pub wilcoxon_p: Option<f64>,
    pub wilcoxon_method: Option<WilcoxonMethod>,
    pub t_stat: Option<f64>,
    pub t_p: Option<f64>,
    pub cohens_d: Option<f64>,
    pub ci95: (f64, f64),
    pub flags: Vec<StatFlag>,
}

impl StatSummary {
    pub fn is_degenerate(&self) -> bool {
        !self.flags.is_empty()
    }
}

pub fn summarize(diffs: &[f64], alternative: Alternative) -> Result<StatSummary, StatsError> {
    if diffs.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(diffs)?;
    let mut flags = Vec::new();
    let mean_diff = mean(diffs);

    let (wilcoxon_statistic, wilcoxon_p, wilcoxon_method, n_effective) =
        match wilcoxon_signed_rank(diffs, alternative) {
            Ok(w) => (Some(w.statistic), Some(w.p_value), Some(w.method), w.n_effective),
            Err(StatsError::NoSignal) => {
                flags.push(StatFlag::NoSignal);
                (None, None, None, 0)
            }
            Err(e) => return Err(e),
        };

    let (t_stat, t_p, cohens_d) = match paired_t_test(diffs, alternative) {
        Ok(t) => (Some(t.t), Some(t.p_value), cohens_d_paired(diffs).ok()),
        Err(StatsError::ZeroVariance) => {
            flags.push(StatFlag::ZeroVariance);
            (None, None, None)
        }
        Err(StatsError::TooFew { .. }) => {
            flags.push(StatFlag::TooFewObservations);
            (None, None, None)
        }
        Err(e) => return Err(e),
    };

    let ci95 = match ci95_mean(diffs) {
        Ok(ci) => (ci.low, ci.high),
        Err(_) => (mean_diff, mean_diff),
    };
    // A collapsed interval sits exactly on the data value.
    let mean_diff = if ci95.0 == ci95.1 { ci95.0 } else { mean_diff };

    Ok(StatSummary {
        n: diffs.len(),
        n_effective,
        mean_diff,
        alternative,
        wilcoxon_statistic,
        wilcoxon_p,
        wilcoxon_method,
        t_stat,
        t_p,
        cohens_d,
        ci95,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute force over all 2^n sign assignments, ranks from scratch.
    fn brute_force_greater(diffs: &[f64]) -> f64 {
        let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        let n = nz.len();
        let rank = |i: usize| {
            let a = nz[i].abs();
            let below = nz.iter().filter(|d| d.abs() < a).count() as f64;
            let equal = nz.iter().filter(|d| d.abs() == a).count() as f64;
            below + (equal + 1.0) / 2.0
        };
        let ranks: Vec<f64> = (0..n).map(rank).collect();
        let observed: f64 = (0..n).filter(|&i| nz[i] > 0.0).map(|i| ranks[i]).sum();
        let hits = (0u32..(1 << n))
            .filter(|mask| {
                let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
                w >= observed
            })
            .count();
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn all_positive_tail() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], Alternative::Greater).unwrap();
        assert_eq!(r.p_value, 1.0 / 32.0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
    }

    #[test]
    fn mixed_signs_match_enumeration() {
        let d = [1.0, -2.0, 3.0, -4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&d, Alternative::Greater).unwrap();
        // W+ = 1 + 3 + 5 + 6 = 15; 14 of 64 assignments reach 15 or more.
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, brute_force_greater(&d));
        assert_eq!(r.p_value, 14.0 / 64.0);
    }

    #[test]
    fn zeros_dropped_and_ties_averaged() {
        let d = [0.0, 1.0, -1.0, 2.0, 2.0, 0.0, 3.0];
        let r = wilcoxon_signed_rank(&d, Alternative::Greater).unwrap();
        assert_eq!(r.n_effective, 5);
        assert_eq!(r.n_zero, 2);
        assert_eq!(r.p_value, brute_force_greater(&d));
        assert_eq!(r.statistic, 1.5 + 3.5 + 3.5 + 5.0);
    }

    #[test]
    fn all_zero_is_degenerate() {
        assert_eq!(
            wilcoxon_signed_rank(&[0.0; 4], Alternative::Greater),
            Err(StatsError::NoSignal)
        );
        assert_eq!(wilcoxon_signed_rank(&[], Alternative::Greater), Err(StatsError::Empty));
    }

    #[test]
    fn dispatch_threshold() {
        let d: Vec<f64> = (1..=30).map(|i| i as f64 * if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let r = wilcoxon_signed_rank(&d, Alternative::Greater).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
        let exact = wilcoxon_exact(&d, Alternative::Greater).unwrap();
        assert!((exact.p_value - r.p_value).abs() < 0.01);
    }

    #[test]
    fn two_sided_and_less() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(wilcoxon_exact(&d, Alternative::TwoSided).unwrap().p_value, 2.0 / 32.0);
        assert_eq!(wilcoxon_exact(&d, Alternative::Less).unwrap().p_value, 1.0);
    }

    #[test]
    fn t_test_reference() {
        let d = [1.0, 2.0, 3.0, 4.0];
        let r = paired_t_test(&d, Alternative::Greater).unwrap();
        assert_abs_diff_eq!(r.t, 3.872983, epsilon = 1e-6);
        assert_abs_diff_eq!(r.p_value, 0.015233146, epsilon = 1e-8);
        let sym = paired_t_test(&[-2.0, -1.0, 1.0, 2.0], Alternative::TwoSided).unwrap();
        assert_eq!(sym.t, 0.0);
        assert_abs_diff_eq!(sym.p_value, 1.0, epsilon = 1e-12);
        assert_eq!(paired_t_test(&[2.0; 5], Alternative::Greater), Err(StatsError::ZeroVariance));
        assert!(matches!(paired_t_test(&[2.0], Alternative::Greater), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn cohens_d_reference() {
        let d = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(cohens_d_paired(&d).unwrap(), 1.936492, epsilon = 1e-6);
        assert_eq!(cohens_d_paired(&[-1.0, 1.0, -2.0, 2.0]).unwrap(), 0.0);
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        assert_eq!(cohens_d_paired(&neg).unwrap(), -cohens_d_paired(&d).unwrap());
        assert_eq!(cohens_d_paired(&[3.0, 3.0]), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn ci_examples() {
        let ci = ci95_mean(&[-1.0, 0.0, 1.0]).unwrap();
        // t(0.975, 2) / sqrt(3); 2.4843 when the factors are pre-rounded.
        assert_abs_diff_eq!(ci.high, 2.484137711843753, epsilon = 1e-9);
        assert_abs_diff_eq!(ci.low, -2.484137711843753, epsilon = 1e-9);
        assert_abs_diff_eq!(ci.high, 2.4843, epsilon = 3e-4);
        let ci = ci95_mean(&[0.3, 0.3, 0.3]).unwrap();
        assert!(ci.degenerate);
        assert_eq!((ci.low, ci.high), (0.3, 0.3));
        assert!(ci95_mean(&[1.0]).is_err());
    }

    #[test]
    fn t_quantile_known_values() {
        assert_abs_diff_eq!(t_quantile(0.975, 2.0), 4.302652729696142, epsilon = 1e-10);
        assert_abs_diff_eq!(t_quantile(0.975, 19.0), 2.093024054408263, epsilon = 1e-10);
    }

    #[test]
    fn summary_flags() {
        assert_eq!(summarize(&[], Alternative::Greater), Err(StatsError::Empty));
        let s = summarize(&[0.0; 5], Alternative::Greater).unwrap();
        assert!(s.flags.contains(&StatFlag::NoSignal));
        assert!(s.flags.contains(&StatFlag::ZeroVariance));
        assert_eq!(s.ci95, (0.0, 0.0));
        let s = summarize(&[0.7; 3], Alternative::Greater).unwrap();
        assert_eq!(s.flags, vec![StatFlag::ZeroVariance]);
        assert_eq!(s.mean_diff, 0.7);
        assert!(s.wilcoxon_p.is_some());
    }

    #[test]
    fn summary_n30_uses_normal_approx() {
        let d: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() + 0.2).collect();
        let s = summarize(&d, Alternative::Greater).unwrap();
        assert_eq!(s.wilcoxon_method, Some(WilcoxonMethod::NormalApprox));
        assert!(s.ci95.0 <= s.mean_diff && s.mean_diff <= s.ci95.1);
    }
}
