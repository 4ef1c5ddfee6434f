mod common;

use ctxcal_core::dataset::ContinuationDomain;
use ctxcal_core::harness::{evaluate, load_run, persist_run, EvalConfig, SweepEntry};
use ctxcal_core::metrics::Unit;
use ctxcal_core::report::{
    emit_sweep_series, epoch_rows, render_contrast, render_continuation_table, render_epoch_table, Format,
    ReportDoc, ReportError,
};
use ctxcal_core::synthetic::{Effect, SyntheticSpec, SyntheticWorld};

fn markdown_rows(doc: &str) -> Vec<Vec<String>> {
    doc.lines()
        .filter(|l| l.starts_with("| "))
        .skip(1)
        .map(|l| l.trim_matches('|').split(" | ").map(|c| c.trim().to_string()).collect())
        .collect()
}

fn csv_rows(doc: &str) -> Vec<Vec<String>> {
    doc.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn markdown_and_csv_carry_the_same_cells() {
    let sweep = common::epoch_fixture_sweep();
    let md = render_epoch_table(&sweep, Format::Markdown, Unit::Nats);
    let csv = render_epoch_table(&sweep, Format::Csv, Unit::Nats);
    assert_eq!(markdown_rows(&md), csv_rows(&csv));
    assert_eq!(markdown_rows(&md).len(), 7);
}

#[test]
fn headers_carry_units_and_sidedness() {
    let sweep = common::epoch_fixture_sweep();
    let md = render_epoch_table(&sweep, Format::Markdown, Unit::Nats);
    let header = md.lines().next().unwrap();
    assert!(header.contains("Literary Δ(ΔI) (nats)"));
    assert!(header.contains("Literary p (greater)"));
    assert!(header.contains("Factual p (two-sided)"));
    let bits = render_epoch_table(&sweep, Format::Markdown, Unit::Bits);
    assert!(bits.lines().next().unwrap().contains("(bits)"));
    assert!(bits.contains("| epoch-5 | +13.82 |"));
}

#[test]
fn missing_factual_domain_renders_placeholder() {
    let sweep = vec![common::fixture_entry("epoch-1", (2.0, 0.2, 0.3), None)];
    let md = render_epoch_table(&sweep, Format::Markdown, Unit::Nats);
    assert!(md.contains("| epoch-1 | +2.00 | 0.200 | 0.30 | — | — | — |"), "{md}");
}

#[test]
fn json_keeps_full_precision() {
    let sweep = vec![common::fixture_entry("e", (9.576_543_21, 0.041_234_5, 0.503_21), None)];
    let json = render_epoch_table(&sweep, Format::Json, Unit::Nats);
    let doc: ReportDoc = serde_json::from_str(&json).unwrap();
    let lit = doc.epoch_table[0].literary.unwrap();
    assert_eq!(lit.delta_delta_i, 9.576_543_21);
    assert_eq!(lit.p, Some(0.041_234_5));
    assert!(doc.metadata.estimator.contains("pointwise MI"));
}

#[test]
fn continuation_table_rows_in_fixed_order() {
    let md = render_continuation_table(&common::continuation_fixture_run(), Format::Markdown, Unit::Nats).unwrap();
    let rows = markdown_rows(&md);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        names,
        [
            "Literary continuation",
            "News (factual control)",
            "Popular science (factual control)",
            "Factual combined"
        ]
    );
    assert_eq!(rows[3][5], "[-0.791, -0.549]");
}

#[test]
fn single_domain_continuation_run_has_one_row() {
    let mut run = common::continuation_fixture_run();
    run.continuation_summaries.retain(|s| s.domain == ContinuationDomain::Literary);
    let csv = render_continuation_table(&run, Format::Csv, Unit::Nats).unwrap();
    assert_eq!(csv_rows(&csv).len(), 1);
    let empty = common::empty_run();
    assert_eq!(
        render_continuation_table(&empty, Format::Csv, Unit::Nats),
        Err(ReportError::NoContinuations)
    );
}

#[test]
fn series_matches_table_values() {
    let sweep = common::epoch_fixture_sweep();
    let series = emit_sweep_series(&sweep).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("checkpoint,lit_d,fact_d,lit_p"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    for (row, table) in rows.iter().zip(epoch_rows(&sweep, Unit::Nats)) {
        assert_eq!(row[0], table.label);
        assert_eq!(row[1].parse::<f64>().unwrap(), table.literary.unwrap().d.unwrap());
        assert_eq!(row[2].parse::<f64>().unwrap(), table.factual.unwrap().d.unwrap());
        assert_eq!(row[3].parse::<f64>().unwrap(), table.literary.unwrap().p.unwrap());
    }
    let peak = rows
        .iter()
        .max_by(|a, b| a[1].parse::<f64>().unwrap().total_cmp(&b[1].parse::<f64>().unwrap()))
        .unwrap();
    assert_eq!(peak[0], "epoch-5");
    assert_eq!(peak[1], "0.5");
}

#[test]
fn series_needs_two_runs() {
    let sweep = common::epoch_fixture_sweep();
    assert_eq!(emit_sweep_series(&sweep[..2]).unwrap().lines().count(), 3);
    assert_eq!(
        emit_sweep_series(&sweep[..1]),
        Err(ReportError::TooFewRuns { need: 2, got: 1 })
    );
}

#[test]
fn rerendering_a_stored_run_is_byte_identical() {
    let world = SyntheticWorld::new(SyntheticSpec {
        seed: 3,
        ..SyntheticSpec::default()
    });
    let base = world.base_provider("base");
    let tuned = world.tuned_provider(
        "tuned",
        Effect {
            literary_shift: 0.5,
            factual_shift: 0.0,
            literary_logp: -0.8,
            factual_logp: -0.6,
        },
        4,
    );
    let run = evaluate(&base, &tuned, &world.benchmark, &EvalConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    persist_run(&run, dir.path()).unwrap();
    let loaded = load_run(dir.path()).unwrap();

    let as_sweep = |r| vec![SweepEntry { label: "run".into(), run: r }];
    for format in [Format::Markdown, Format::Csv, Format::Json] {
        assert_eq!(
            render_epoch_table(&as_sweep(run.clone()), format, Unit::Nats),
            render_epoch_table(&as_sweep(loaded.clone()), format, Unit::Nats)
        );
        assert_eq!(
            render_continuation_table(&run, format, Unit::Bits).unwrap(),
            render_continuation_table(&loaded, format, Unit::Bits).unwrap()
        );
    }
    assert_eq!(render_contrast(&run, Unit::Nats), render_contrast(&loaded, Unit::Nats));
}

#[test]
fn contrast_names_sidedness() {
    let sweep = common::epoch_fixture_sweep();
    let text = render_contrast(&sweep[3].run, Unit::Nats);
    assert!(text.contains("Literary: n=20, mean Δ(ΔI) +9.58 nats, Wilcoxon p=0.041 (greater), d=0.50"), "{text}");
    assert!(text.contains("Factual control: n=20, mean Δ(ΔI) -3.04 nats, Wilcoxon p=0.689 (two-sided), d=-0.12"));
}
