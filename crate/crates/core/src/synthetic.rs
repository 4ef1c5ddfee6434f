//! Seeded synthetic benchmarks with planted base-vs-tuned effects.
//!
//! Each paired item gets a base ΔI drawn from N(2σ, σ²), where σ is
//! [`SyntheticSpec::spread`]. A tuned provider adds a per-item Δ(ΔI) of
//! `shift·σ + jitter·σ·z`. Literary jitter is i.i.d.; the factual jitter is
//! mirrored (+z, −z pairs) so the planted factual effect is zero in every
//! sample, not just in expectation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{BenchmarkSet, ContinuationItem, Domain, FactualSubdomain, PairedItem};
use crate::provider::StubProvider;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_literary: usize,
    pub n_factual: usize,
    /// Continuation items per bucket (literary, news, popsci).
    pub n_continuation: usize,
    /// Between-item standard deviation of the base ΔI, nats.
    pub spread: f64,
    /// Noise on each planted Δ(ΔI), in units of `spread`.
    pub jitter: f64,
    pub null_context: String,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_literary: 20,
            n_factual: 20,
            n_continuation: 10,
            spread: 4.0,
            jitter: 0.25,
            null_context: String::new(),
            seed: 0,
        }
    }
}

/// Planted effects for one tuned provider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effect {
    /// Mean literary Δ(ΔI), in units of `spread`.
    pub literary_shift: f64,
    /// Mean factual Δ(ΔI), in units of `spread`.
    pub factual_shift: f64,
    /// Per-token logprob change on literary continuations, nats.
    pub literary_logp: f64,
    /// Per-token logprob change on factual continuations, nats.
    pub factual_logp: f64,
}

impl Effect {
    pub const NONE: Effect = Effect {
        literary_shift: 0.0,
        factual_shift: 0.0,
        literary_logp: 0.0,
        factual_logp: 0.0,
    };

    pub fn literary(shift: f64) -> Self {
        Effect {
            literary_shift: shift,
            ..Effect::NONE
        }
    }
}

#[derive(Debug, Clone)]
struct PairedPlant {
    context: String,
    good: String,
    bad: String,
    domain: Domain,
    uncond_good: f64,
    uncond_bad: f64,
    i_good: f64,
    i_bad: f64,
}

#[derive(Debug, Clone)]
struct ContinuationPlant {
    context: String,
    target: String,
    literary: bool,
    per_token: f64,
}

/// A benchmark plus the base-model logprobs planted for it.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub spec: SyntheticSpec,
    pub benchmark: BenchmarkSet,
    paired: Vec<(String, PairedPlant)>,
    continuations: Vec<ContinuationPlant>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn item(id: String, domain: Domain, context: String, good: String, bad: String) -> PairedItem {
    PairedItem {
        id,
        domain,
        context,
        option_good: good,
        option_bad: bad,
        publication_date: None,
        dimension_tags: None,
        extra: BTreeMap::new(),
    }
}

impl SyntheticWorld {
    pub fn new(spec: SyntheticSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut benchmark = BenchmarkSet::default();
        let mut paired = Vec::new();
        let groups = [
            (Domain::Literary, "lit", spec.n_literary),
            (Domain::Factual, "fact", spec.n_factual),
        ];
        for (domain, prefix, n) in groups {
            for k in 0..n {
                let id = format!("{prefix}-{k:03}");
                let context = format!("context for {id}");
                let delta_i = spec.spread * (2.0 + normal(&mut rng));
                let i_bad = 1.0 + normal(&mut rng);
                let good = format!("the fitting choice {id}");
                let bad = format!("the jarring choice {id}");
                let plant = PairedPlant {
                    context: context.clone(),
                    good: good.clone(),
                    bad: bad.clone(),
                    domain,
                    uncond_good: -12.0 + normal(&mut rng),
                    uncond_bad: -12.0 + normal(&mut rng),
                    i_good: i_bad + delta_i,
                    i_bad,
                };
                benchmark.paired.push(item(id.clone(), domain, context, good, bad));
                paired.push((id, plant));
            }
        }

        let mut continuations = Vec::new();
        let buckets = [
            (Domain::Literary, None, "cont-lit"),
            (Domain::Factual, Some(FactualSubdomain::News), "cont-news"),
            (Domain::Factual, Some(FactualSubdomain::Popsci), "cont-pop"),
        ];
        for (domain, subdomain, prefix) in buckets {
            for k in 0..spec.n_continuation {
                let id = format!("{prefix}-{k:03}");
                let context = format!("passage before {id}");
                let target = format!("the passage that followed {id}");
                benchmark.continuations.push(ContinuationItem {
                    id,
                    domain,
                    subdomain,
                    context: context.clone(),
                    ground_truth: target.clone(),
                    publication_date: None,
                    extra: BTreeMap::new(),
                });
                continuations.push(ContinuationPlant {
                    context,
                    target,
                    literary: domain == Domain::Literary,
                    per_token: -2.9 + 0.3 * normal(&mut rng),
                });
            }
        }

        Self {
            spec,
            benchmark,
            paired,
            continuations,
        }
    }

    fn plant_paired(&self, stub: &mut StubProvider, plant: &PairedPlant, offset: f64, i_good: f64) {
        let null = &self.spec.null_context;
        let uncond_good = plant.uncond_good + offset;
        let uncond_bad = plant.uncond_bad + offset;
        stub.plant_total(null, &plant.good, uncond_good);
        stub.plant_total(null, &plant.bad, uncond_bad);
        stub.plant_total(&plant.context, &plant.good, uncond_good + i_good);
        stub.plant_total(&plant.context, &plant.bad, uncond_bad + plant.i_bad);
    }

    pub fn base_provider(&self, id: &str) -> StubProvider {
        let mut stub = StubProvider::new(id).with_model("synthetic-base").with_max_parallel(4);
        for (_, plant) in &self.paired {
            self.plant_paired(&mut stub, plant, 0.0, plant.i_good);
        }
        for c in &self.continuations {
            stub.plant_per_token(&c.context, &c.target, c.per_token);
        }
        stub
    }

    /// A tuned provider carrying `effect`; `seed` drives the jitter.
    pub fn tuned_provider(&self, id: &str, effect: Effect, seed: u64) -> StubProvider {
        self.tuned_with_plants(id, effect, seed).0
    }

    /// Like [`tuned_provider`](Self::tuned_provider), also returning the
    /// planted Δ(ΔI) per item id.
    pub fn tuned_with_plants(&self, id: &str, effect: Effect, seed: u64) -> (StubProvider, BTreeMap<String, f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stub = StubProvider::new(id).with_model("synthetic-tuned").with_max_parallel(4);
        let mut planted = BTreeMap::new();
        let sigma = self.spec.spread;
        let jitter = self.spec.jitter;

        let mut mirror: Option<f64> = None;
        let n_factual = self.paired.iter().filter(|(_, p)| p.domain == Domain::Factual).count();
        let mut factual_seen = 0;
        for (item_id, plant) in &self.paired {
            let z = match plant.domain {
                Domain::Literary => normal(&mut rng),
                Domain::Factual => {
                    factual_seen += 1;
                    match mirror.take() {
                        Some(z) => -z,
                        // An odd item out gets no noise, keeping the sum zero.
                        None if factual_seen == n_factual => 0.0,
                        None => {
                            let z = normal(&mut rng);
                            mirror = Some(z);
                            z
                        }
                    }
                }
            };
            let shift = match plant.domain {
                Domain::Literary => effect.literary_shift,
                Domain::Factual => effect.factual_shift,
            };
            let dd = sigma * (shift + jitter * z);
            // Tuned unconditionals move too; pointwise MI cancels the offset.
            self.plant_paired(&mut stub, plant, -0.5, plant.i_good + dd);
            planted.insert(item_id.clone(), dd);
        }
        for c in &self.continuations {
            let delta = if c.literary {
                effect.literary_logp
            } else {
                effect.factual_logp
            };
            stub.plant_per_token(&c.context, &c.target, c.per_token + delta + 0.02 * normal(&mut rng));
        }
        (stub, planted)
    }
}
