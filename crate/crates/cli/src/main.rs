use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ctxcal_core::dataset::{
    dimension_coverage_summary, load_benchmark_with_warnings, time_window_check, BenchmarkSet, DatasetError,
    Domain,
};
use ctxcal_core::harness::{
    evaluate, load_run, load_sweep, persist_run, persist_sweep, run_sweep, select_checkpoint, DiagnosticLoss,
    EvalConfig, HarnessError, SweepEntry, SweepPlan, SweepPlanFile, DEFAULT_FAILURE_BUDGET,
};
use ctxcal_core::metrics::{continuation_metrics, paired_delta_i, prescreen_rank, DecisionPoint, Normalization, Unit};
use ctxcal_core::provider::{CachedProvider, HttpProvider, LogprobProvider, ProviderEndpoint, ScoreCache};
use ctxcal_core::report::{
    emit_sweep_series, render_continuation_table, render_contrast, render_epoch_table, Format,
};
use serde::Deserialize;
use serde_json::json;

mod demo;

const AUTH_ENV: &str = "CTXCAL_API_KEY";

#[derive(Parser)]
#[command(name = "ctxcal", version, about = "Measure how fine-tuning shifts a model's sensitivity to context")]
struct Cli {
    /// Raise log verbosity (repeatable). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a benchmark file and summarize it.
    Validate(ValidateArgs),
    /// Score every item under one model and print per-item metrics as JSON lines.
    Score(ScoreArgs),
    /// Compare a tuned model against its base over a benchmark.
    Eval(EvalArgs),
    /// Evaluate a series of checkpoints against one base.
    Sweep(SweepArgs),
    /// Pick the checkpoint with the strongest literary effect from a sweep.
    Select(SelectArgs),
    /// Rank decision points by KL(expert || pretrained).
    Prescreen(PrescreenArgs),
    /// Render tables or plot data from a stored run or sweep.
    Report(ReportArgs),
    /// Run the exact-probability checks on small toy models.
    DemoOracle,
}

#[derive(Args)]
struct ValidateArgs {
    /// Benchmark file (JSON lines).
    file: PathBuf,
    /// Flag items published on or before this date (YYYY-MM-DD).
    #[arg(long)]
    cutoff: Option<NaiveDate>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Total,
    PerToken,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Total => Normalization::Total,
            NormArg::PerToken => Normalization::PerToken,
        }
    }
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum UnitArg {
    #[default]
    Nats,
    Bits,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Nats => Unit::Nats,
            UnitArg::Bits => Unit::Bits,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Markdown => Format::Markdown,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Literary,
    Factual,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Literary => Domain::Literary,
            DomainArg::Factual => Domain::Factual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Epoch,
    Continuation,
    Contrast,
    Series,
}

/// Settings shared by `score` and `eval`. Every field is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    endpoint: Option<String>,
    base: Option<String>,
    tuned: Option<String>,
    model: Option<String>,
    base_model: Option<String>,
    tuned_model: Option<String>,
    benchmark: Option<PathBuf>,
    null_context: Option<String>,
    normalization: Option<Normalization>,
    max_parallel: Option<usize>,
    cache: Option<PathBuf>,
    failure_budget: Option<f64>,
    timeout_secs: Option<f64>,
    separator: Option<String>,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON file with defaults for any of these options.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark file (JSON lines).
    #[arg(long)]
    benchmark: Option<PathBuf>,
    #[arg(long, value_enum)]
    normalization: Option<NormArg>,
    /// Context used for the unconditional term; empty by default.
    #[arg(long)]
    null_context: Option<String>,
    /// Concurrent requests per endpoint.
    #[arg(long)]
    max_parallel: Option<usize>,
    /// Score cache file; reused across runs.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Text placed between context and target in the prompt.
    #[arg(long)]
    separator: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Base URL of an OpenAI-compatible completions server.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    unit: UnitArg,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Base model server URL.
    #[arg(long)]
    base: Option<String>,
    /// Tuned model server URL.
    #[arg(long)]
    tuned: Option<String>,
    /// Model name for both servers unless overridden.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    base_model: Option<String>,
    #[arg(long)]
    tuned_model: Option<String>,
    /// Largest tolerated fraction of failed items.
    #[arg(long)]
    failure_budget: Option<f64>,
    /// Run directory to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep plan (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Sweep directory to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    /// Sweep directory.
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "literary")]
    domain: DomainArg,
}

#[derive(Args)]
struct PrescreenArgs {
    /// JSON lines of {"id", "expert", "pretrained"}.
    file: PathBuf,
    /// Keep only the first N points.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
}

#[derive(Args)]
struct ReportArgs {
    /// Run or sweep directory.
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    /// Defaults to epoch for a sweep and continuation for a single run.
    #[arg(long, value_enum)]
    table: Option<TableArg>,
    #[arg(long, value_enum, default_value_t)]
    unit: UnitArg,
    /// Sweep checkpoint for per-run tables; defaults to the selected one.
    #[arg(long)]
    checkpoint: Option<String>,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidPlan(_) | HarnessError::EmptyBenchmark => Failure::Invalid(e.to_string()),
            HarnessError::Dataset(inner) => inner.into(),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn runtime(context: impl std::fmt::Display) -> impl FnOnce(io::Error) -> Failure {
    move |e| Failure::Runtime(format!("{context}: {e}"))
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Validate(args) => validate(args),
        Command::Score(args) => score(args),
        Command::Eval(args) => eval(args),
        Command::Sweep(args) => sweep(args),
        Command::Select(args) => select(args),
        Command::Prescreen(args) => prescreen(args),
        Command::Report(args) => report(args),
        Command::DemoOracle => demo::run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(m) => eprintln!("error: {m}\n\nFor more information, try '--help'."),
                Failure::Invalid(m) | Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(failure.code())
        }
    }
}

fn validate(args: ValidateArgs) -> Result<()> {
    let (set, warnings) = load_benchmark_with_warnings(&args.file)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let count = |domain| set.paired.iter().filter(|i| i.domain == domain).count();
    println!(
        "{}: {} paired ({} literary, {} factual), {} continuation",
        args.file.display(),
        set.paired.len(),
        count(Domain::Literary),
        count(Domain::Factual),
        set.continuations.len()
    );
    let cov = dimension_coverage_summary(&set);
    println!(
        "dimension tags: {} with three, {} with two, {} with one, {} untagged",
        cov.three, cov.two, cov.one, cov.untagged
    );
    if let Some(cutoff) = args.cutoff {
        let window = time_window_check(&set, cutoff);
        let flagged: Vec<_> = window.flagged().collect();
        println!("time window (after {cutoff}): {} flagged", flagged.len());
        for entry in flagged {
            let date = entry.publication_date.map_or("undated".to_string(), |d| d.to_string());
            println!("  {} {date}", entry.id);
        }
    }
    Ok(())
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path).map_err(runtime(path.display()))?;
    serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Failure::Usage(format!("missing {flag} (pass the flag or set it in --config)")))
}

fn load_set(path: &Path) -> Result<BenchmarkSet> {
    let (set, warnings) = load_benchmark_with_warnings(path)?;
    for w in warnings {
        tracing::warn!("{}: {w}", path.display());
    }
    Ok(set)
}

/// Options resolved from flags over the config file.
struct Resolved {
    benchmark: PathBuf,
    eval: EvalConfig,
    max_parallel: Option<usize>,
    cache: Option<PathBuf>,
    separator: Option<String>,
    timeout: Option<f64>,
}

fn resolve(common: CommonArgs, cfg: &mut ConfigFile) -> Result<Resolved> {
    let benchmark = required(common.benchmark.or(cfg.benchmark.take()), "--benchmark")?;
    let eval = EvalConfig {
        normalization: common
            .normalization
            .map(Normalization::from)
            .or(cfg.normalization)
            .unwrap_or_default(),
        null_context: common.null_context.or(cfg.null_context.take()).unwrap_or_default(),
        failure_budget: cfg.failure_budget.unwrap_or(DEFAULT_FAILURE_BUDGET),
    };
    Ok(Resolved {
        benchmark,
        eval,
        max_parallel: common.max_parallel.or(cfg.max_parallel),
        cache: common.cache.or(cfg.cache.take()),
        separator: common.separator.or(cfg.separator.take()),
        timeout: common.timeout.or(cfg.timeout_secs),
    })
}

fn endpoint(url: String, model: String, opts: &Resolved) -> Result<HttpProvider> {
    let mut e = ProviderEndpoint::new(url, model);
    e.auth_token = std::env::var(AUTH_ENV).ok().filter(|t| !t.is_empty());
    if let Some(k) = opts.max_parallel {
        e.max_parallel = k;
    }
    if let Some(s) = &opts.separator {
        e.separator = s.clone();
    }
    if let Some(t) = opts.timeout {
        e.timeout_secs = t;
    }
    HttpProvider::new(e).map_err(Failure::Invalid)
}

fn open_cache(path: &Path) -> Result<Arc<ScoreCache>> {
    let cache = ScoreCache::open(path).map_err(runtime(path.display()))?;
    if cache.skipped_records() > 0 {
        tracing::warn!("{}: skipped {} damaged records", path.display(), cache.skipped_records());
    }
    Ok(Arc::new(cache))
}

fn score(args: ScoreArgs) -> Result<()> {
    let mut cfg = read_config(args.common.config.as_deref())?;
    let url = required(args.endpoint.or(cfg.endpoint.take()), "--endpoint")?;
    let model = required(args.model.or(cfg.model.take()), "--model")?;
    let opts = resolve(args.common, &mut cfg)?;
    let set = load_set(&opts.benchmark)?;
    let provider = endpoint(url, model, &opts)?;
    let unit = Unit::from(args.unit);
    match &opts.cache {
        Some(path) => {
            let cached = CachedProvider::new(provider, open_cache(path)?);
            score_items(&cached, &set, &opts.eval, unit, args.out.as_deref())
        }
        None => score_items(&provider, &set, &opts.eval, unit, args.out.as_deref()),
    }
}

fn score_items<P: LogprobProvider>(
    provider: &P,
    set: &BenchmarkSet,
    cfg: &EvalConfig,
    unit: Unit,
    out: Option<&Path>,
) -> Result<()> {
    let total = set.paired.len() + set.continuations.len();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(total));
    let workers = provider.max_parallel().clamp(1, total.max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= total {
                    break;
                }
                let record = if let Some(item) = set.paired.get(idx) {
                    paired_delta_i(item, provider, &cfg.null_context, cfg.normalization)
                        .map(|m| {
                            json!({
                                "kind": "paired",
                                "item_id": m.item_id,
                                "domain": item.domain,
                                "i_good": unit.from_nats(m.i_good),
                                "i_bad": unit.from_nats(m.i_bad),
                                "delta_i": unit.from_nats(m.delta_i),
                                "unit": unit,
                                "normalization": m.normalization,
                            })
                        })
                        .map_err(|e| (item.id.clone(), e.to_string()))
                } else {
                    let item = &set.continuations[idx - set.paired.len()];
                    provider
                        .score_target(&item.context, &item.ground_truth)
                        .map(|score| {
                            let m = continuation_metrics(&item.id, &score, unit);
                            json!({
                                "kind": "continuation",
                                "item_id": m.item_id,
                                "domain": item.bucket(),
                                "mean_logp_per_token": m.mean_logp_per_token,
                                "token_count": m.token_count,
                                "unit": m.unit,
                                "normalization": Normalization::PerToken,
                            })
                        })
                        .map_err(|e| (item.id.clone(), e.to_string()))
                };
                results.lock().expect("results lock").push(record);
            });
        }
    });

    let mut records = Vec::new();
    let mut failed = Vec::new();
    for r in results.into_inner().expect("results lock") {
        match r {
            Ok(v) => records.push(v),
            Err(f) => failed.push(f),
        }
    }
    records.sort_by(|a, b| a["item_id"].as_str().cmp(&b["item_id"].as_str()));
    let mut text = String::new();
    for r in &records {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text).map_err(runtime(path.display()))?,
        None => io::stdout().write_all(text.as_bytes()).map_err(runtime("stdout"))?,
    }
    failed.sort();
    for (id, e) in &failed {
        eprintln!("failed {id}: {e}");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} of {total} items failed", failed.len())))
    }
}

fn eval(args: EvalArgs) -> Result<()> {
    let mut cfg = read_config(args.common.config.as_deref())?;
    let base_url = required(args.base.or(cfg.base.take()), "--base")?;
    let tuned_url = required(args.tuned.or(cfg.tuned.take()), "--tuned")?;
    let model = args.model.or(cfg.model.take());
    let base_model = required(args.base_model.or(cfg.base_model.take()).or(model.clone()), "--base-model or --model")?;
    let tuned_model = required(args.tuned_model.or(cfg.tuned_model.take()).or(model), "--tuned-model or --model")?;
    let failure_budget = args.failure_budget.or(cfg.failure_budget);
    let mut opts = resolve(args.common, &mut cfg)?;
    if let Some(b) = failure_budget {
        if !(0.0..=1.0).contains(&b) {
            return Err(Failure::Usage(format!("--failure-budget must lie in [0, 1], got {b}")));
        }
        opts.eval.failure_budget = b;
    }
    let set = load_set(&opts.benchmark)?;
    let base = endpoint(base_url, base_model, &opts)?;
    let tuned = endpoint(tuned_url, tuned_model, &opts)?;
    let run = match &opts.cache {
        Some(path) => {
            let cache = open_cache(path)?;
            let base = CachedProvider::new(base, cache.clone());
            let tuned = CachedProvider::new(tuned, cache);
            evaluate(&base, &tuned, &set, &opts.eval)?
        }
        None => evaluate(&base, &tuned, &set, &opts.eval)?,
    };
    persist_run(&run, &args.out)?;
    print!("{}", render_contrast(&run, Unit::Nats));
    if !run.failures.is_empty() {
        eprintln!("{} items failed; see failures.json", run.failures.len());
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.plan).map_err(runtime(args.plan.display()))?;
    let plan: SweepPlanFile =
        serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", args.plan.display())))?;
    let root = args.plan.parent().unwrap_or(Path::new("."));
    let benchmark = root.join(&plan.benchmark);
    let set = load_set(&benchmark)?;
    let token = std::env::var(AUTH_ENV).ok().filter(|t| !t.is_empty());
    let http = |mut e: ProviderEndpoint| {
        e.auth_token = token.clone();
        HttpProvider::new(e).map_err(Failure::Invalid)
    };
    let cache_path = plan
        .cache
        .as_ref()
        .map(|c| root.join(c))
        .unwrap_or_else(|| args.out.join("cache.jsonl"));
    fs::create_dir_all(&args.out).map_err(runtime(args.out.display()))?;
    let mut checkpoints = Vec::new();
    for spec in plan.checkpoints {
        checkpoints.push((spec.label, http(spec.endpoint)?));
    }
    let sweep_plan = SweepPlan {
        base: http(plan.base)?,
        checkpoints,
        benchmark: set,
        config: plan.eval,
        cache: open_cache(&cache_path)?,
    };
    let mut results = run_sweep(&sweep_plan)?;
    results.diagnostics = plan.eval_loss.map(|eval_loss| DiagnosticLoss { eval_loss });
    persist_sweep(&results, &args.out)?;
    for f in &results.failures {
        eprintln!("checkpoint {} failed: {}", f.label, f.error);
    }
    if results.entries.is_empty() {
        return Err(Failure::Runtime("every checkpoint failed".into()));
    }
    print!("{}", render_epoch_table(&results.entries, Format::Markdown, Unit::Nats));
    Ok(())
}

fn select(args: SelectArgs) -> Result<()> {
    let results = load_sweep(&args.dir)?;
    let label = select_checkpoint(&results.entries, args.domain.into())?;
    println!("{label}");
    Ok(())
}

fn prescreen(args: PrescreenArgs) -> Result<()> {
    let file = fs::File::open(&args.file).map_err(runtime(args.file.display()))?;
    let mut points = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(runtime(args.file.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let point: DecisionPoint = serde_json::from_str(&line)
            .map_err(|e| Failure::Invalid(format!("{} line {}: {e}", args.file.display(), idx + 1)))?;
        points.push(point);
    }
    let outcome = prescreen_rank(&points);
    for w in &outcome.warnings {
        eprintln!("warning: excluded {w}");
    }
    let ranked = &outcome.ranked[..args.top.unwrap_or(usize::MAX).min(outcome.ranked.len())];
    let mut out = String::new();
    match args.format {
        FormatArg::Markdown => {
            out.push_str("| Rank | Decision point | KL (nats) |\n|---|---|---|\n");
            for (i, p) in ranked.iter().enumerate() {
                out.push_str(&format!("| {} | {} | {} |\n", i + 1, p.id, p.kl));
            }
        }
        FormatArg::Csv => {
            out.push_str("rank,id,kl_nats\n");
            for (i, p) in ranked.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", i + 1, p.id, p.kl));
            }
        }
        FormatArg::Json => {
            for (i, p) in ranked.iter().enumerate() {
                let kl = p.kl.finite().map_or(json!("inf"), |v| json!(v));
                out.push_str(&json!({"rank": i + 1, "id": p.id, "kl_nats": kl}).to_string());
                out.push('\n');
            }
        }
    }
    print!("{out}");
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let format = Format::from(args.format);
    let unit = Unit::from(args.unit);
    let is_sweep = args.dir.join("sweep.json").is_file();
    let entries = if is_sweep {
        load_sweep(&args.dir)?.entries
    } else {
        let label = args
            .dir
            .file_name()
            .map_or("run".to_string(), |n| n.to_string_lossy().into_owned());
        vec![SweepEntry {
            label,
            run: load_run(&args.dir)?,
        }]
    };
    let table = args
        .table
        .unwrap_or(if is_sweep { TableArg::Epoch } else { TableArg::Continuation });
    let pick = || -> Result<&SweepEntry> {
        let label = match &args.checkpoint {
            Some(l) => l.clone(),
            None if entries.len() == 1 => entries[0].label.clone(),
            None => select_checkpoint(&entries, Domain::Literary)?,
        };
        entries
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| Failure::Usage(format!("no checkpoint named {label:?}")))
    };
    let text = match table {
        TableArg::Epoch => render_epoch_table(&entries, format, unit),
        TableArg::Series => emit_sweep_series(&entries).map_err(|e| Failure::Invalid(e.to_string()))?,
        TableArg::Continuation => render_continuation_table(&pick()?.run, format, unit)
            .map_err(|e| Failure::Invalid(e.to_string()))?,
        TableArg::Contrast => render_contrast(&pick()?.run, unit),
    };
    print!("{text}");
    Ok(())
}
