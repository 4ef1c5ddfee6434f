use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use ctxcal_core::dataset::{
    dimension_coverage_summary, read_benchmark, write_benchmark, BenchmarkSet, ContinuationItem, Dimension, Domain,
    FactualSubdomain, PairedItem,
};
use ctxcal_core::metrics::{
    delta_delta_i, kl_divergence, pointwise_mi, rank_of_correct, Divergence, Normalization, PairedMetrics,
};
use ctxcal_core::oracle::{JointTable, ToyModel};
use ctxcal_core::provider::{cached_score, LogprobProvider, OracleProvider, ScoreCache, ScoreResult, StubProvider};
use ctxcal_core::stats::{
    cohens_d_paired, paired_t_test, wilcoxon_exact, wilcoxon_normal, wilcoxon_signed_rank, Alternative,
};

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ,.'é\"\\\\-]{0,24}"
}

fn nonempty_text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ,.'é-]{1,24}"
}

fn date() -> impl Strategy<Value = Option<NaiveDate>> {
    proptest::option::of((2000i32..2030, 1u32..=12, 1u32..=28).prop_map(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d).unwrap()))
}

fn extra() -> impl Strategy<Value = BTreeMap<String, Value>> {
    proptest::collection::btree_map(
        "x_[a-z]{1,6}",
        prop_oneof![
            text().prop_map(Value::String),
            any::<i32>().prop_map(Value::from),
            any::<bool>().prop_map(Value::Bool),
        ],
        0..3,
    )
}

fn domain() -> impl Strategy<Value = Domain> {
    prop_oneof![Just(Domain::Literary), Just(Domain::Factual)]
}

fn tags() -> impl Strategy<Value = Option<BTreeSet<Dimension>>> {
    proptest::option::of(proptest::collection::btree_set(
        prop_oneof![Just(Dimension::Intent), Just(Dimension::Audience), Just(Dimension::Reality)],
        0..=3,
    ))
}

fn paired(id: String) -> impl Strategy<Value = PairedItem> {
    (domain(), text(), nonempty_text(), nonempty_text(), date(), tags(), extra()).prop_filter_map(
        "options must differ",
        move |(domain, context, good, bad, publication_date, dimension_tags, extra)| {
            (good != bad).then(|| PairedItem {
                id: id.clone(),
                domain,
                context,
                option_good: good,
                option_bad: bad,
                publication_date,
                dimension_tags,
                extra,
            })
        },
    )
}

fn continuation(id: String) -> impl Strategy<Value = ContinuationItem> {
    (
        domain(),
        proptest::option::of(prop_oneof![Just(FactualSubdomain::News), Just(FactualSubdomain::Popsci)]),
        text(),
        nonempty_text(),
        date(),
        extra(),
    )
        .prop_map(move |(domain, subdomain, context, ground_truth, publication_date, extra)| ContinuationItem {
            id: id.clone(),
            domain,
            subdomain: if domain == Domain::Factual { subdomain } else { None },
            context,
            ground_truth,
            publication_date,
            extra,
        })
}

fn benchmark() -> impl Strategy<Value = BenchmarkSet> {
    (0usize..6, 0usize..6, extra()).prop_flat_map(|(np, nc, metadata)| {
        let paired: Vec<_> = (0..np).map(|k| paired(format!("p{k}"))).collect();
        let conts: Vec<_> = (0..nc).map(|k| continuation(format!("c{k}"))).collect();
        (paired, conts, Just(metadata)).prop_map(|(paired, continuations, metadata)| BenchmarkSet {
            paired,
            continuations,
            metadata,
        })
    })
}

fn score(target: &str, total: f64) -> ScoreResult {
    ScoreResult::new("p", "ctx", target, vec![total], vec![target.to_string()]).unwrap()
}

/// Multiples of 1/8 keep every sum and difference exact.
fn dyadic() -> impl Strategy<Value = f64> {
    (-400i32..0).prop_map(|k| k as f64 / 8.0)
}

fn distribution(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], k).prop_filter_map("nonzero mass", |raw| {
        let total: f64 = raw.iter().sum();
        (total > 1e-6).then(|| raw.iter().map(|v| v / total).collect())
    })
}

fn diffs(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(
        prop_oneof![(-6i32..=6).prop_map(f64::from), -5.0f64..5.0],
        1..=max_n,
    )
    .prop_filter("some nonzero", |d| d.iter().any(|v| *v != 0.0))
}

/// Probability that W+ equals its observed value under the exact null.
fn point_mass(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    let ranks: Vec<f64> = nz
        .iter()
        .map(|d| {
            let below = nz.iter().filter(|e| e.abs() < d.abs()).count() as f64;
            let equal = nz.iter().filter(|e| e.abs() == d.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = (0..n).filter(|&i| nz[i] > 0.0).map(|i| ranks[i]).sum();
    let hits = (0u32..(1 << n))
        .filter(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum::<f64>() == observed)
        .count();
    hits as f64 / (1u64 << n) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn benchmark_round_trips(set in benchmark()) {
        let mut buf = Vec::new();
        write_benchmark(&set, &mut buf).unwrap();
        let (back, _) = read_benchmark(buf.as_slice()).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn line_order_does_not_matter(set in benchmark(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut buf = Vec::new();
        write_benchmark(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (back, _) = read_benchmark(lines.join("\n").as_bytes()).unwrap();
        prop_assert_eq!(back.canonical(), set.canonical());
    }

    #[test]
    fn coverage_counts_every_paired_item(set in benchmark()) {
        prop_assert_eq!(dimension_coverage_summary(&set).total(), set.paired.len());
    }

    #[test]
    fn delta_i_is_shift_invariant(
        cg in dyadic(), ug in dyadic(), cb in dyadic(), ub in dyadic(), c in -64i32..64,
    ) {
        let c = c as f64 / 4.0;
        let delta = |shift: f64| {
            let i_good = pointwise_mi(&score("g", cg + shift), &score("g", ug + shift), Normalization::Total).unwrap();
            let i_bad = pointwise_mi(&score("b", cb + shift), &score("b", ub + shift), Normalization::Total).unwrap();
            PairedMetrics::new("item", i_good, i_bad, Normalization::Total).delta_i
        };
        prop_assert_eq!(delta(0.0), delta(c));
    }

    #[test]
    fn delta_delta_i_is_antisymmetric(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0, d in -50.0f64..50.0) {
        let x = PairedMetrics::new("item", a, b, Normalization::Total);
        let y = PairedMetrics::new("item", c, d, Normalization::Total);
        prop_assert_eq!(delta_delta_i(&x, &y).unwrap().value, -delta_delta_i(&y, &x).unwrap().value);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self((p, q) in (2usize..6).prop_flat_map(|k| (distribution(k), distribution(k)))) {
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), Divergence::Finite(0.0));
        match kl_divergence(&p, &q).unwrap() {
            Divergence::Finite(v) => prop_assert!(v >= 0.0),
            Divergence::Infinite => prop_assert!(p.iter().zip(&q).any(|(a, b)| *a > 0.0 && *b == 0.0)),
        }
    }

    #[test]
    fn rank_is_invariant_under_increasing_transforms(scores in proptest::collection::vec(-50i32..50, 2..12), pick in any::<proptest::sample::Index>()) {
        let named: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, s)| (format!("o{i}"), *s as f64)).collect();
        let transformed: Vec<(String, f64)> = named.iter().map(|(n, s)| (n.clone(), s.powi(3) + 2.0 * s)).collect();
        let correct = &named[pick.index(named.len())].0;
        prop_assert_eq!(rank_of_correct(&named, correct).unwrap(), rank_of_correct(&transformed, correct).unwrap());
    }

    #[test]
    fn wilcoxon_is_scale_invariant(d in diffs(25), scale in 0.01f64..100.0) {
        let scaled: Vec<f64> = d.iter().map(|v| v * scale).collect();
        for alt in [Alternative::Greater, Alternative::Less, Alternative::TwoSided] {
            prop_assert_eq!(
                wilcoxon_signed_rank(&d, alt).unwrap().p_value,
                wilcoxon_signed_rank(&scaled, alt).unwrap().p_value
            );
        }
    }

    #[test]
    fn negation_gives_complementary_tail(d in diffs(12)) {
        let p = wilcoxon_signed_rank(&d, Alternative::Greater).unwrap().p_value;
        let negated: Vec<f64> = d.iter().map(|v| -v).collect();
        let q = wilcoxon_signed_rank(&negated, Alternative::Greater).unwrap().p_value;
        prop_assert!((q - (1.0 - p + point_mass(&d))).abs() < 1e-12, "p={p} q={q}");
    }

    #[test]
    fn normal_approximation_is_close(n in 10usize..=20, shift in -0.5f64..0.8, seed in any::<u64>()) {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); z + shift }).collect();
        for alt in [Alternative::Greater, Alternative::Less, Alternative::TwoSided] {
            let exact = wilcoxon_exact(&d, alt).unwrap().p_value;
            let approx = wilcoxon_normal(&d, alt).unwrap().p_value;
            prop_assert!((exact - approx).abs() < 0.02, "n={n} {alt}: {exact} vs {approx}");
        }
    }

    #[test]
    fn t_equals_d_root_n(d in proptest::collection::vec(-100.0f64..100.0, 2..50)) {
        prop_assume!(d.iter().any(|v| *v != d[0]));
        let t = paired_t_test(&d, Alternative::TwoSided).unwrap().t;
        prop_assert_eq!(t, cohens_d_paired(&d).unwrap() * (d.len() as f64).sqrt());
    }

    #[test]
    fn mutual_information_is_nonnegative_and_symmetric(nx in 1usize..6, ny in 1usize..6, seed in any::<u64>()) {
        let joint = JointTable::random(&[nx, ny], &mut ChaCha8Rng::seed_from_u64(seed));
        let mi = joint.mutual_information().unwrap();
        prop_assert!(mi >= 0.0);
        let (fwd, rev) = joint.mutual_information_routes().unwrap();
        prop_assert!((fwd - rev).abs() < 1e-10);
    }

    #[test]
    fn providers_are_pure(seed in any::<u64>(), target in "[ab]{1,3}") {
        let model = ToyModel::random(vec!['a', 'b'], 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let oracle = OracleProvider::new("toy", model);
        prop_assert_eq!(oracle.score_target("", &target).unwrap(), oracle.score_target("", &target).unwrap());
        let stub = StubProvider::new("s").with_default(-1.5);
        prop_assert_eq!(stub.score_target("ctx", &target).unwrap(), stub.score_target("ctx", &target).unwrap());
    }

    #[test]
    fn cache_returns_what_it_stored(lps in proptest::collection::vec(-30.0f64..0.0, 1..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let target: String = "x".repeat(lps.len());
        let mut stub = StubProvider::new("s");
        stub.plant_tokens("ctx", &target, lps.clone());
        let stored = {
            let cache = ScoreCache::open(&path).unwrap();
            cached_score(&cache, &stub, "ctx", &target).unwrap()
        };
        let cache = ScoreCache::open(&path).unwrap();
        let offline = StubProvider::new("s").unreachable();
        prop_assert_eq!(cached_score(&cache, &offline, "ctx", &target).unwrap(), stored);
    }
}
