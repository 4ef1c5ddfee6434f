#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use ctxcal_core::dataset::{ContinuationDomain, Domain};
use ctxcal_core::harness::{
    primary_alternative, ContinuationSummary, DomainSummary, EvalConfig, EvaluationRun, RunConfig, SweepEntry,
    RUN_SCHEMA_VERSION,
};
use ctxcal_core::stats::{Alternative, StatSummary, WilcoxonMethod};

/// (mean Δ(ΔI), primary p, d)
pub type Cells = (f64, f64, f64);

/// Seven checkpoints: (label, literary, factual).
pub const EPOCH_FIXTURE: [(&str, Cells, Cells); 7] = [
    ("epoch-2", (1.54, 0.273, 0.22), (-1.37, 0.727, -0.14)),
    ("epoch-3", (4.12, 0.226, 0.30), (-2.34, 0.676, -0.13)),
    ("epoch-4", (7.87, 0.049, 0.47), (-1.64, 0.551, -0.07)),
    ("epoch-5", (9.58, 0.041, 0.50), (-3.04, 0.689, -0.12)),
    ("epoch-6", (8.41, 0.095, 0.38), (-0.97, 0.580, -0.04)),
    ("epoch-8", (9.57, 0.077, 0.38), (-3.04, 0.676, -0.10)),
    ("epoch-12", (11.71, 0.062, 0.39), (-1.15, 0.536, -0.03)),
];

/// (domain, n, base mean, tuned mean, Δ, CI)
pub type ContinuationCells = (ContinuationDomain, usize, f64, f64, f64, (f64, f64));

pub const CONTINUATION_FIXTURE: [ContinuationCells; 4] = [
    (ContinuationDomain::Literary, 20, -2.890, -3.703, -0.813, (-0.894, -0.731)),
    (ContinuationDomain::News, 10, -2.496, -3.104, -0.609, (-0.762, -0.456)),
    (ContinuationDomain::Popsci, 10, -2.300, -3.032, -0.732, (-0.943, -0.520)),
    (ContinuationDomain::FactualCombined, 20, -2.398, -3.068, -0.670, (-0.791, -0.549)),
];

pub fn stat(mean: f64, p: f64, d: f64, alternative: Alternative) -> StatSummary {
    StatSummary {
        n: 20,
        n_effective: 20,
        mean_diff: mean,
        alternative,
        wilcoxon_statistic: Some(140.0),
        wilcoxon_p: Some(p),
        wilcoxon_method: Some(WilcoxonMethod::Exact),
        t_stat: Some(d * 20f64.sqrt()),
        t_p: Some(p),
        cohens_d: Some(d),
        ci95: (mean - 1.0, mean + 1.0),
        flags: Vec::new(),
    }
}

pub fn domain_summary(domain: Domain, (mean, p, d): Cells) -> DomainSummary {
    let primary = stat(mean, p, d, primary_alternative(domain));
    let (greater, two_sided) = match primary_alternative(domain) {
        Alternative::Greater => (primary.clone(), stat(mean, (2.0 * p).min(1.0), d, Alternative::TwoSided)),
        _ => (stat(mean, p / 2.0, d, Alternative::Greater), primary.clone()),
    };
    DomainSummary {
        domain,
        n: 20,
        base_mean_delta_i: 14.37,
        tuned_mean_delta_i: 14.37 + mean,
        mean_delta_delta_i: mean,
        primary_alternative: primary_alternative(domain),
        greater,
        two_sided,
    }
}

pub fn empty_run() -> EvaluationRun {
    EvaluationRun {
        config: RunConfig {
            schema_version: RUN_SCHEMA_VERSION,
            base_provider_id: "fixture-base".into(),
            base_model: "base".into(),
            tuned_provider_id: "fixture-tuned".into(),
            tuned_model: "tuned".into(),
            eval: EvalConfig::default(),
            estimator: "fixture".into(),
            effect_size: "d_z".into(),
            wilcoxon_exact_max_n: 20,
            literary_alternative: Alternative::Greater,
            factual_alternative: Alternative::TwoSided,
            logprob_unit: "nats".into(),
            benchmark_metadata: BTreeMap::new(),
            started_at: DateTime::<Utc>::UNIX_EPOCH,
            finished_at: DateTime::<Utc>::UNIX_EPOCH,
        },
        paired: Vec::new(),
        continuations: Vec::new(),
        paired_summaries: Vec::new(),
        continuation_summaries: Vec::new(),
        failures: Vec::new(),
    }
}

pub fn fixture_entry(label: &str, literary: Cells, factual: Option<Cells>) -> SweepEntry {
    let mut run = empty_run();
    run.paired_summaries.push(domain_summary(Domain::Literary, literary));
    if let Some(f) = factual {
        run.paired_summaries.push(domain_summary(Domain::Factual, f));
    }
    SweepEntry {
        label: label.into(),
        run,
    }
}

pub fn epoch_fixture_sweep() -> Vec<SweepEntry> {
    EPOCH_FIXTURE
        .iter()
        .map(|(label, lit, fact)| fixture_entry(label, *lit, Some(*fact)))
        .collect()
}

pub fn continuation_fixture_run() -> EvaluationRun {
    let mut run = empty_run();
    for (domain, n, base_mean, tuned_mean, delta_mean, ci95) in CONTINUATION_FIXTURE {
        run.continuation_summaries.push(ContinuationSummary {
            domain,
            n,
            base_mean,
            tuned_mean,
            delta_mean,
            ci95,
        });
    }
    run
}
