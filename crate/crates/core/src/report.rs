//! Table rendering and plot-data export for evaluation runs and sweeps.
//!
//! Rounded cells use fixed precision: two decimals for Δ(ΔI) means and
//! Cohen's d, three for p-values and per-token logprobs. The JSON format keeps
//! full precision.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Domain;
use crate::harness::{primary_alternative, EvaluationRun, SweepEntry};
use crate::metrics::{Normalization, Unit, ESTIMATOR_NOTE};
use crate::stats::{Alternative, EFFECT_SIZE_VARIANT};

pub const MISSING: &str = "—";

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("need at least {need} runs, got {got}")]
    TooFewRuns { need: usize, got: usize },
    #[error("run has no continuation results")]
    NoContinuations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (markdown, csv, json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainCells {
    pub delta_delta_i: f64,
    pub p: Option<f64>,
    pub d: Option<f64>,
}

/// One checkpoint's row of the epoch table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub label: String,
    pub literary: Option<DomainCells>,
    pub factual: Option<DomainCells>,
}

fn domain_cells(run: &EvaluationRun, domain: Domain, unit: Unit) -> Option<DomainCells> {
    let summary = run.domain_summary(domain)?;
    let primary = summary.primary();
    Some(DomainCells {
        delta_delta_i: unit.from_nats(summary.mean_delta_delta_i),
        p: primary.wilcoxon_p,
        d: primary.cohens_d,
    })
}

impl EpochRow {
    pub fn from_run(label: &str, run: &EvaluationRun, unit: Unit) -> Self {
        Self {
            label: label.to_string(),
            literary: domain_cells(run, Domain::Literary, unit),
            factual: domain_cells(run, Domain::Factual, unit),
        }
    }

    /// The seven rounded cells, in column order.
    pub fn cells(&self) -> [String; 7] {
        let (ldelta, lp, ld) = split(self.literary);
        let (fdelta, fp, fd) = split(self.factual);
        [self.label.clone(), ldelta, lp, ld, fdelta, fp, fd]
    }
}

fn split(cells: Option<DomainCells>) -> (String, String, String) {
    match cells {
        None => (MISSING.into(), MISSING.into(), MISSING.into()),
        Some(c) => (
            format!("{:+.2}", c.delta_delta_i),
            c.p.map_or_else(|| MISSING.to_string(), |p| format!("{p:.3}")),
            c.d.map_or_else(|| MISSING.to_string(), |d| format!("{d:.2}")),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRow {
    pub domain: String,
    pub n: usize,
    pub base_mean: f64,
    pub tuned_mean: f64,
    pub delta: f64,
    pub ci95: (f64, f64),
}

impl ContinuationRow {
    pub fn cells(&self) -> [String; 6] {
        [
            self.domain.clone(),
            self.n.to_string(),
            format!("{:.3}", self.base_mean),
            format!("{:.3}", self.tuned_mean),
            format!("{:+.3}", self.delta),
            format!("[{:.3}, {:.3}]", self.ci95.0, self.ci95.1),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub unit: Unit,
    pub normalization: Normalization,
    pub estimator: String,
    pub effect_size: String,
    pub literary_alternative: Alternative,
    pub factual_alternative: Alternative,
    pub rounding: String,
}

impl ReportMetadata {
    pub fn new(unit: Unit, normalization: Normalization) -> Self {
        Self {
            unit,
            normalization,
            estimator: ESTIMATOR_NOTE.to_string(),
            effect_size: EFFECT_SIZE_VARIANT.to_string(),
            literary_alternative: primary_alternative(Domain::Literary),
            factual_alternative: primary_alternative(Domain::Factual),
            rounding: "Δ(ΔI) and d: 2 decimals; p: 3 decimals; log P: 3 decimals".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub metadata: ReportMetadata,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epoch_table: Vec<EpochRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub continuation_table: Vec<ContinuationRow>,
}

fn epoch_headers(unit: Unit) -> [String; 7] {
    let lit = primary_alternative(Domain::Literary);
    let fact = primary_alternative(Domain::Factual);
    [
        "Checkpoint".into(),
        format!("Literary Δ(ΔI) ({unit})"),
        format!("Literary p ({lit})"),
        "Literary d".into(),
        format!("Factual Δ(ΔI) ({unit})"),
        format!("Factual p ({fact})"),
        "Factual d".into(),
    ]
}

fn continuation_headers(unit: Unit) -> [String; 6] {
    [
        "Domain".into(),
        "n".into(),
        format!("Base log P ({unit}/token)"),
        format!("Tuned log P ({unit}/token)"),
        format!("Δ log P ({unit}/token)"),
        "95% CI".into(),
    ]
}

fn markdown_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", headers.join(" | "));
    let _ = writeln!(out, "|{}|", vec!["---"; headers.len()].join("|"));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in std::iter::once(headers.to_vec()).chain(rows.iter().cloned()) {
        let line: Vec<String> = row.iter().map(|c| csv_field(c)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

fn json_doc(doc: &ReportDoc) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}

fn run_normalization(entries: &[SweepEntry]) -> Normalization {
    entries
        .first()
        .map(|e| e.run.config.eval.normalization)
        .unwrap_or_default()
}

pub fn epoch_rows(entries: &[SweepEntry], unit: Unit) -> Vec<EpochRow> {
    entries
        .iter()
        .map(|e| EpochRow::from_run(&e.label, &e.run, unit))
        .collect()
}

/// One row per checkpoint, in sweep order.
pub fn render_epoch_table(entries: &[SweepEntry], format: Format, unit: Unit) -> String {
    let rows = epoch_rows(entries, unit);
    let metadata = ReportMetadata::new(unit, run_normalization(entries));
    render_epoch_rows(&rows, &metadata, format)
}

pub fn render_epoch_rows(rows: &[EpochRow], metadata: &ReportMetadata, format: Format) -> String {
    let headers = epoch_headers(metadata.unit);
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells().to_vec()).collect();
    match format {
        Format::Markdown => {
            let mut out = markdown_table(&headers, &cells);
            let _ = writeln!(
                out,
                "\nΔ(ΔI): mean tuned − base pointwise-MI gap, {} normalization. p: Wilcoxon signed-rank. d: {}.",
                metadata.normalization, metadata.effect_size
            );
            out
        }
        Format::Csv => csv_table(&headers, &cells),
        Format::Json => json_doc(&ReportDoc {
            metadata: metadata.clone(),
            epoch_table: rows.to_vec(),
            continuation_table: Vec::new(),
        }),
    }
}

pub fn continuation_rows(run: &EvaluationRun, unit: Unit) -> Vec<ContinuationRow> {
    run.continuation_summaries
        .iter()
        .map(|s| ContinuationRow {
            domain: s.domain.label().to_string(),
            n: s.n,
            base_mean: unit.from_nats(s.base_mean),
            tuned_mean: unit.from_nats(s.tuned_mean),
            delta: unit.from_nats(s.delta_mean),
            ci95: (unit.from_nats(s.ci95.0), unit.from_nats(s.ci95.1)),
        })
        .collect()
}

pub fn render_continuation_table(run: &EvaluationRun, format: Format, unit: Unit) -> Result<String, ReportError> {
    let rows = continuation_rows(run, unit);
    if rows.is_empty() {
        return Err(ReportError::NoContinuations);
    }
    let metadata = ReportMetadata::new(unit, run.config.eval.normalization);
    Ok(render_continuation_rows(&rows, &metadata, format))
}

pub fn render_continuation_rows(rows: &[ContinuationRow], metadata: &ReportMetadata, format: Format) -> String {
    let headers = continuation_headers(metadata.unit);
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells().to_vec()).collect();
    match format {
        Format::Markdown => {
            let mut out = markdown_table(&headers, &cells);
            let _ = writeln!(
                out,
                "\nMean per-token log P of the ground-truth continuation; Δ = tuned − base; CI is Student-t over items."
            );
            out
        }
        Format::Csv => csv_table(&headers, &cells),
        Format::Json => json_doc(&ReportDoc {
            metadata: metadata.clone(),
            epoch_table: Vec::new(),
            continuation_table: rows.to_vec(),
        }),
    }
}

/// Plain-language literary-vs-factual contrast for one run.
pub fn render_contrast(run: &EvaluationRun, unit: Unit) -> String {
    let mut out = String::new();
    for domain in [Domain::Literary, Domain::Factual] {
        let label = match domain {
            Domain::Literary => "Literary",
            Domain::Factual => "Factual control",
        };
        let Some(s) = run.domain_summary(domain) else {
            let _ = writeln!(out, "{label}: no paired items.");
            continue;
        };
        let p = s.primary();
        let p_text = p.wilcoxon_p.map_or_else(|| MISSING.to_string(), |v| format!("{v:.3}"));
        let d_text = p.cohens_d.map_or_else(|| MISSING.to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            out,
            "{label}: n={}, mean Δ(ΔI) {:+.2} {unit}, Wilcoxon p={p_text} ({}), d={d_text}{}",
            s.n,
            unit.from_nats(s.mean_delta_delta_i),
            s.primary_alternative,
            if p.is_degenerate() { " [degenerate]" } else { "" },
        );
    }
    out
}

fn full(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// CSV plot data with columns checkpoint, lit_d, fact_d, lit_p at full
/// precision. Missing values are empty fields.
pub fn emit_sweep_series(entries: &[SweepEntry]) -> Result<String, ReportError> {
    if entries.len() < 2 {
        return Err(ReportError::TooFewRuns {
            need: 2,
            got: entries.len(),
        });
    }
    let mut out = String::from("checkpoint,lit_d,fact_d,lit_p\n");
    for row in epoch_rows(entries, Unit::Nats) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&row.label),
            full(row.literary.and_then(|c| c.d)),
            full(row.factual.and_then(|c| c.d)),
            full(row.literary.and_then(|c| c.p)),
        );
    }
    Ok(out)
}
