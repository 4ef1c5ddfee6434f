//! Base-vs-tuned evaluation runs, checkpoint sweeps, selection, and run
//! persistence.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{BenchmarkSet, ContinuationDomain, ContinuationItem, Domain, PairedItem};
use crate::metrics::{
    delta_delta_i, paired_delta_i, per_token_delta_logp, DeltaDeltaI, MetricsError, Normalization,
    PairedMetrics, ESTIMATOR_NOTE,
};
use crate::provider::{CachedProvider, LogprobProvider, ProviderEndpoint, ScoreCache};
use crate::stats::{self, summarize, Alternative, StatSummary, StatsError, EFFECT_SIZE_VARIANT, EXACT_MAX_N};

pub const RUN_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_FAILURE_BUDGET: f64 = 0.10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("benchmark has no items")]
    EmptyBenchmark,
    #[error("{failed} of {total} items failed scoring (budget {budget}); first error: {first}")]
    FailureBudgetExceeded {
        failed: usize,
        total: usize,
        budget: f64,
        first: String,
    },
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
    #[error("no successful checkpoint runs with a {0} summary")]
    NoSuccessfulRuns(Domain),
    #[error("stored run schema version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("checksum mismatch for {0}")]
    ChecksumMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> HarnessError + '_ {
    move |source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub null_context: String,
    /// Largest tolerated fraction of failed items.
    #[serde(default = "default_failure_budget")]
    pub failure_budget: f64,
}

fn default_failure_budget() -> f64 {
    DEFAULT_FAILURE_BUDGET
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            normalization: Normalization::Total,
            null_context: String::new(),
            failure_budget: DEFAULT_FAILURE_BUDGET,
        }
    }
}

/// Sidedness of the headline test per domain: the literary claim is
/// one-sided, the factual control two-sided.
pub fn primary_alternative(domain: Domain) -> Alternative {
    match domain {
        Domain::Literary => Alternative::Greater,
        Domain::Factual => Alternative::TwoSided,
    }
}

/// Everything needed to interpret a stored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub base_provider_id: String,
    pub base_model: String,
    pub tuned_provider_id: String,
    pub tuned_model: String,
    pub eval: EvalConfig,
    pub estimator: String,
    pub effect_size: String,
    pub wilcoxon_exact_max_n: usize,
    pub literary_alternative: Alternative,
    pub factual_alternative: Alternative,
    pub logprob_unit: String,
    pub benchmark_metadata: BTreeMap<String, Value>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRecord {
    pub item_id: String,
    pub domain: Domain,
    pub base: PairedMetrics,
    pub tuned: PairedMetrics,
    pub delta: DeltaDeltaI,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub item_id: String,
    pub domain: ContinuationDomain,
    pub token_count: usize,
    /// Mean per-token logprob, nats.
    pub base_logp: f64,
    pub tuned_logp: f64,
    /// tuned − base, nats per token.
    pub delta_logp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub domain: Domain,
    pub n: usize,
    pub base_mean_delta_i: f64,
    pub tuned_mean_delta_i: f64,
    pub mean_delta_delta_i: f64,
    pub primary_alternative: Alternative,
    pub greater: StatSummary,
    pub two_sided: StatSummary,
}

impl DomainSummary {
    pub fn primary(&self) -> &StatSummary {
        match self.primary_alternative {
            Alternative::Greater => &self.greater,
            _ => &self.two_sided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSummary {
    pub domain: ContinuationDomain,
    pub n: usize,
    pub base_mean: f64,
    pub tuned_mean: f64,
    pub delta_mean: f64,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub item_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRun {
    pub config: RunConfig,
    pub paired: Vec<PairedRecord>,
    pub continuations: Vec<ContinuationRecord>,
    pub paired_summaries: Vec<DomainSummary>,
    pub continuation_summaries: Vec<ContinuationSummary>,
    pub failures: Vec<ItemFailure>,
}

impl EvaluationRun {
    pub fn domain_summary(&self, domain: Domain) -> Option<&DomainSummary> {
        self.paired_summaries.iter().find(|s| s.domain == domain)
    }

    pub fn continuation_summary(&self, domain: ContinuationDomain) -> Option<&ContinuationSummary> {
        self.continuation_summaries.iter().find(|s| s.domain == domain)
    }

    /// Ids with a result or a recorded failure.
    pub fn accounted_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .paired
            .iter()
            .map(|r| r.item_id.as_str())
            .chain(self.continuations.iter().map(|r| r.item_id.as_str()))
            .chain(self.failures.iter().map(|f| f.item_id.as_str()))
            .collect();
        ids.sort_unstable();
        ids
    }
}

enum Task<'a> {
    Paired(&'a PairedItem),
    Continuation(&'a ContinuationItem),
}

impl Task<'_> {
    fn id(&self) -> &str {
        match self {
            Task::Paired(i) => &i.id,
            Task::Continuation(i) => &i.id,
        }
    }
}

enum Outcome {
    Paired(PairedRecord),
    Continuation(ContinuationRecord),
}

fn score_paired<B, T>(item: &PairedItem, base: &B, tuned: &T, cfg: &EvalConfig) -> Result<PairedRecord, MetricsError>
where
    B: LogprobProvider + ?Sized,
    T: LogprobProvider + ?Sized,
{
    let b = paired_delta_i(item, base, &cfg.null_context, cfg.normalization)?;
    let t = paired_delta_i(item, tuned, &cfg.null_context, cfg.normalization)?;
    let delta = delta_delta_i(&b, &t)?;
    Ok(PairedRecord {
        item_id: item.id.clone(),
        domain: item.domain,
        base: b,
        tuned: t,
        delta,
    })
}

fn score_continuation<B, T>(item: &ContinuationItem, base: &B, tuned: &T) -> Result<ContinuationRecord, MetricsError>
where
    B: LogprobProvider + ?Sized,
    T: LogprobProvider + ?Sized,
{
    let wrap = |source| MetricsError::Provider {
        item_id: item.id.clone(),
        source,
    };
    let b = base.score_target(&item.context, &item.ground_truth).map_err(wrap)?;
    let t = tuned.score_target(&item.context, &item.ground_truth).map_err(wrap)?;
    let delta_logp = per_token_delta_logp(&b, &t)?;
    Ok(ContinuationRecord {
        item_id: item.id.clone(),
        domain: item.bucket(),
        token_count: b.token_count,
        base_logp: b.mean_per_token(),
        tuned_logp: t.mean_per_token(),
        delta_logp,
    })
}

/// Scores every item under both providers and aggregates per domain.
///
/// At most `min(base.max_parallel(), tuned.max_parallel())` items are in
/// flight, and each item issues its requests sequentially, so neither
/// provider sees more concurrent requests than its limit. Results are
/// ordered by item id regardless of completion order.
pub fn evaluate<B, T>(
    base: &B,
    tuned: &T,
    benchmark: &BenchmarkSet,
    config: &EvalConfig,
) -> Result<EvaluationRun, HarnessError>
where
    B: LogprobProvider + ?Sized,
    T: LogprobProvider + ?Sized,
{
    if benchmark.is_empty() {
        return Err(HarnessError::EmptyBenchmark);
    }
    let started_at = Utc::now();
    let tasks: Vec<Task> = benchmark
        .paired
        .iter()
        .map(Task::Paired)
        .chain(benchmark.continuations.iter().map(Task::Continuation))
        .collect();

    let workers = base.max_parallel().min(tuned.max_parallel()).max(1).min(tasks.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Outcome, MetricsError>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(task) = tasks.get(i) else { break };
                let outcome = match task {
                    Task::Paired(item) => score_paired(item, base, tuned, config).map(Outcome::Paired),
                    Task::Continuation(item) => score_continuation(item, base, tuned).map(Outcome::Continuation),
                };
                slots.lock().expect("result slots")[i] = Some(outcome);
            });
        }
    });

    let mut paired = Vec::new();
    let mut continuations = Vec::new();
    let mut failures = Vec::new();
    let slots = slots.into_inner().expect("result slots");
    for (task, slot) in tasks.iter().zip(slots) {
        match slot.expect("every task ran") {
            Ok(Outcome::Paired(r)) => paired.push(r),
            Ok(Outcome::Continuation(r)) => continuations.push(r),
            Err(e) => failures.push(ItemFailure {
                item_id: task.id().to_string(),
                error: e.to_string(),
            }),
        }
    }
    paired.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    continuations.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    failures.sort_by(|a, b| a.item_id.cmp(&b.item_id));

    let total = tasks.len();
    if failures.len() as f64 > config.failure_budget * total as f64 {
        return Err(HarnessError::FailureBudgetExceeded {
            failed: failures.len(),
            total,
            budget: config.failure_budget,
            first: failures[0].error.clone(),
        });
    }
    for f in &failures {
        tracing::warn!("item {} failed: {}", f.item_id, f.error);
    }

    let paired_summaries = [Domain::Literary, Domain::Factual]
        .into_iter()
        .filter_map(|d| summarize_domain(&paired, d).transpose())
        .collect::<Result<Vec<_>, _>>()?;
    let continuation_summaries = summarize_continuations(&continuations);

    Ok(EvaluationRun {
        config: RunConfig {
            schema_version: RUN_SCHEMA_VERSION,
            base_provider_id: base.provider_id().to_string(),
            base_model: base.model_name().to_string(),
            tuned_provider_id: tuned.provider_id().to_string(),
            tuned_model: tuned.model_name().to_string(),
            eval: config.clone(),
            estimator: ESTIMATOR_NOTE.to_string(),
            effect_size: EFFECT_SIZE_VARIANT.to_string(),
            wilcoxon_exact_max_n: EXACT_MAX_N,
            literary_alternative: primary_alternative(Domain::Literary),
            factual_alternative: primary_alternative(Domain::Factual),
            logprob_unit: "nats".to_string(),
            benchmark_metadata: benchmark.metadata.clone(),
            started_at,
            finished_at: Utc::now(),
        },
        paired,
        continuations,
        paired_summaries,
        continuation_summaries,
        failures,
    })
}

fn summarize_domain(records: &[PairedRecord], domain: Domain) -> Result<Option<DomainSummary>, StatsError> {
    let rows: Vec<&PairedRecord> = records.iter().filter(|r| r.domain == domain).collect();
    if rows.is_empty() {
        return Ok(None);
    }
    let diffs: Vec<f64> = rows.iter().map(|r| r.delta.value).collect();
    let base: Vec<f64> = rows.iter().map(|r| r.base.delta_i).collect();
    let tuned: Vec<f64> = rows.iter().map(|r| r.tuned.delta_i).collect();
    let greater = summarize(&diffs, Alternative::Greater)?;
    let two_sided = summarize(&diffs, Alternative::TwoSided)?;
    Ok(Some(DomainSummary {
        domain,
        n: rows.len(),
        base_mean_delta_i: stats::mean(&base),
        tuned_mean_delta_i: stats::mean(&tuned),
        mean_delta_delta_i: greater.mean_diff,
        primary_alternative: primary_alternative(domain),
        greater,
        two_sided,
    }))
}

fn continuation_summary(domain: ContinuationDomain, rows: &[&ContinuationRecord]) -> ContinuationSummary {
    let base: Vec<f64> = rows.iter().map(|r| r.base_logp).collect();
    let tuned: Vec<f64> = rows.iter().map(|r| r.tuned_logp).collect();
    let delta: Vec<f64> = rows.iter().map(|r| r.delta_logp).collect();
    let delta_mean = stats::mean(&delta);
    let ci95 = stats::ci95_mean(&delta)
        .map(|ci| (ci.low, ci.high))
        .unwrap_or((delta_mean, delta_mean));
    ContinuationSummary {
        domain,
        n: rows.len(),
        base_mean: stats::mean(&base),
        tuned_mean: stats::mean(&tuned),
        delta_mean,
        ci95,
    }
}

fn summarize_continuations(records: &[ContinuationRecord]) -> Vec<ContinuationSummary> {
    use ContinuationDomain::*;
    let mut out = Vec::new();
    for domain in [Literary, News, Popsci, Factual] {
        let rows: Vec<&ContinuationRecord> = records.iter().filter(|r| r.domain == domain).collect();
        if !rows.is_empty() {
            out.push(continuation_summary(domain, &rows));
        }
    }
    let factual: Vec<&ContinuationRecord> = records.iter().filter(|r| r.domain.is_factual()).collect();
    if !factual.is_empty() {
        out.push(continuation_summary(FactualCombined, &factual));
    }
    out
}

/// Per-checkpoint training loss, kept apart from the runs so that checkpoint
/// selection cannot see it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticLoss {
    pub eval_loss: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub run: EvaluationRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFailure {
    pub label: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    /// In checkpoint order.
    pub entries: Vec<SweepEntry>,
    pub failures: Vec<CheckpointFailure>,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticLoss>,
}

/// A sweep over checkpoint providers against one base provider.
pub struct SweepPlan<P> {
    pub base: P,
    pub checkpoints: Vec<(String, P)>,
    pub benchmark: BenchmarkSet,
    pub config: EvalConfig,
    pub cache: Arc<ScoreCache>,
}

impl<P> SweepPlan<P> {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.checkpoints.is_empty() {
            return Err(HarnessError::InvalidPlan("no checkpoints".into()));
        }
        let mut seen = HashSet::new();
        for (label, _) in &self.checkpoints {
            if label.is_empty() {
                return Err(HarnessError::InvalidPlan("empty checkpoint label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(HarnessError::InvalidPlan(format!("duplicate label {label:?}")));
            }
        }
        Ok(())
    }
}

/// Evaluates every checkpoint against the base. All scores go through the
/// plan's cache, so base scores are computed once and reused by later
/// checkpoints (and by a resumed sweep when the cache is file-backed). A
/// failing checkpoint is recorded and does not stop the others.
pub fn run_sweep<P: LogprobProvider>(plan: &SweepPlan<P>) -> Result<SweepResults, HarnessError> {
    plan.validate()?;
    let base = CachedProvider::new(&plan.base, plan.cache.clone());
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (label, provider) in &plan.checkpoints {
        let tuned = CachedProvider::new(provider, plan.cache.clone());
        match evaluate(&base, &tuned, &plan.benchmark, &plan.config) {
            Ok(run) => entries.push(SweepEntry {
                label: label.clone(),
                run,
            }),
            Err(e) => {
                tracing::warn!("checkpoint {label} failed: {e}");
                failures.push(CheckpointFailure {
                    label: label.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(SweepResults {
        entries,
        failures,
        diagnostics: None,
    })
}

/// Picks the checkpoint with the smallest primary Wilcoxon p on `domain`;
/// ties go to the larger Cohen's d, then to the earlier checkpoint.
pub fn select_checkpoint(entries: &[SweepEntry], domain: Domain) -> Result<String, HarnessError> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (idx, entry) in entries.iter().enumerate() {
        let Some(summary) = entry.run.domain_summary(domain) else { continue };
        let primary = summary.primary();
        let Some(p) = primary.wilcoxon_p else { continue };
        let d = primary.cohens_d.unwrap_or(f64::NEG_INFINITY);
        let better = match best {
            None => true,
            Some((_, bp, bd)) => p < bp || (p == bp && d > bd),
        };
        if better {
            best = Some((idx, p, d));
        }
    }
    best.map(|(idx, _, _)| entries[idx].label.clone())
        .ok_or(HarnessError::NoSuccessfulRuns(domain))
}

/// Plan file for `sweep`: endpoints plus the benchmark path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlanFile {
    pub base: ProviderEndpoint,
    pub checkpoints: Vec<CheckpointSpec>,
    pub benchmark: PathBuf,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(flatten)]
    pub eval: EvalConfig,
    /// Optional training-loss series keyed by checkpoint label; reported only.
    #[serde(default)]
    pub eval_loss: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSpec {
    pub label: String,
    pub endpoint: ProviderEndpoint,
}

const RUN_FILES: [&str; 4] = ["config.json", "items.jsonl", "summary.json", "failures.json"];

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    checksums: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ItemLine {
    Paired(PairedRecord),
    Continuation(ContinuationRecord),
}

#[derive(Serialize, Deserialize)]
struct SummaryFile {
    paired: Vec<DomainSummary>,
    continuation: Vec<ContinuationSummary>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn to_json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("run data serializes");
    bytes.push(b'\n');
    bytes
}

/// Stores a run as config.json, items.jsonl, summary.json, failures.json and
/// a manifest of their checksums.
pub fn persist_run(run: &EvaluationRun, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut items = Vec::new();
    for r in &run.paired {
        serde_json::to_writer(&mut items, &ItemLine::Paired(r.clone())).expect("serializes");
        items.push(b'\n');
    }
    for r in &run.continuations {
        serde_json::to_writer(&mut items, &ItemLine::Continuation(r.clone())).expect("serializes");
        items.push(b'\n');
    }
    let contents: [Vec<u8>; 4] = [
        to_json_pretty(&run.config),
        items,
        to_json_pretty(&SummaryFile {
            paired: run.paired_summaries.clone(),
            continuation: run.continuation_summaries.clone(),
        }),
        to_json_pretty(&run.failures),
    ];
    let mut checksums = BTreeMap::new();
    for (name, bytes) in RUN_FILES.iter().zip(&contents) {
        write_atomic(&dir.join(name), bytes)?;
        checksums.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = Manifest {
        schema_version: RUN_SCHEMA_VERSION,
        checksums,
    };
    write_atomic(&dir.join("manifest.json"), &to_json_pretty(&manifest))
}

pub fn load_run(dir: &Path) -> Result<EvaluationRun, HarnessError> {
    let manifest_path = dir.join("manifest.json");
    let raw = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_slice(&raw).map_err(json_err(&manifest_path))?;
    if manifest.schema_version != RUN_SCHEMA_VERSION {
        return Err(HarnessError::SchemaVersion {
            found: manifest.schema_version,
            expected: RUN_SCHEMA_VERSION,
        });
    }
    let mut contents = BTreeMap::new();
    for name in RUN_FILES {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if manifest.checksums.get(name) != Some(&sha256_hex(&bytes)) {
            return Err(HarnessError::ChecksumMismatch(path.display().to_string()));
        }
        contents.insert(name, bytes);
    }

    let config: RunConfig =
        serde_json::from_slice(&contents["config.json"]).map_err(json_err(&dir.join("config.json")))?;
    if config.schema_version != RUN_SCHEMA_VERSION {
        return Err(HarnessError::SchemaVersion {
            found: config.schema_version,
            expected: RUN_SCHEMA_VERSION,
        });
    }
    let items_path = dir.join("items.jsonl");
    let mut paired = Vec::new();
    let mut continuations = Vec::new();
    for line in contents["items.jsonl"].split(|b| *b == b'\n') {
        if line.is_empty() {
            continue;
        }
        match serde_json::from_slice(line).map_err(json_err(&items_path))? {
            ItemLine::Paired(r) => paired.push(r),
            ItemLine::Continuation(r) => continuations.push(r),
        }
    }
    let summary: SummaryFile =
        serde_json::from_slice(&contents["summary.json"]).map_err(json_err(&dir.join("summary.json")))?;
    let failures: Vec<ItemFailure> =
        serde_json::from_slice(&contents["failures.json"]).map_err(json_err(&dir.join("failures.json")))?;
    Ok(EvaluationRun {
        config,
        paired,
        continuations,
        paired_summaries: summary.paired,
        continuation_summaries: summary.continuation,
        failures,
    })
}

#[derive(Serialize, Deserialize)]
struct SweepIndex {
    schema_version: u32,
    checkpoints: Vec<String>,
    failures: Vec<CheckpointFailure>,
    #[serde(default)]
    diagnostics: Option<DiagnosticLoss>,
}

fn check_label(label: &str) -> Result<(), HarnessError> {
    let ok = !label.is_empty()
        && !label.starts_with('.')
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(HarnessError::InvalidPlan(format!(
            "checkpoint label {label:?} is not usable as a directory name"
        )))
    }
}

/// Stores each checkpoint run under `dir/<label>/` plus a `sweep.json` index.
pub fn persist_sweep(results: &SweepResults, dir: &Path) -> Result<(), HarnessError> {
    for entry in &results.entries {
        check_label(&entry.label)?;
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for entry in &results.entries {
        persist_run(&entry.run, &dir.join(&entry.label))?;
    }
    let index = SweepIndex {
        schema_version: RUN_SCHEMA_VERSION,
        checkpoints: results.entries.iter().map(|e| e.label.clone()).collect(),
        failures: results.failures.clone(),
        diagnostics: results.diagnostics.clone(),
    };
    write_atomic(&dir.join("sweep.json"), &to_json_pretty(&index))
}

pub fn load_sweep(dir: &Path) -> Result<SweepResults, HarnessError> {
    let path = dir.join("sweep.json");
    let raw = fs::read(&path).map_err(io_err(&path))?;
    let index: SweepIndex = serde_json::from_slice(&raw).map_err(json_err(&path))?;
    if index.schema_version != RUN_SCHEMA_VERSION {
        return Err(HarnessError::SchemaVersion {
            found: index.schema_version,
            expected: RUN_SCHEMA_VERSION,
        });
    }
    let mut entries = Vec::new();
    for label in index.checkpoints {
        check_label(&label)?;
        let run = load_run(&dir.join(&label))?;
        entries.push(SweepEntry { label, run });
    }
    Ok(SweepResults {
        entries,
        failures: index.failures,
        diagnostics: index.diagnostics,
    })
}
