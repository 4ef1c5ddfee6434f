//! Exact finite probability models.
//!
//! [`JointTable`] holds a dense joint distribution over two or three discrete
//! axes and computes entropies and mutual information exactly. [`ToyModel`] is
//! a tiny autoregressive model whose likelihood function and sampler are both
//! driven by the same conditional tables, so every sequence probability can be
//! enumerated. Both serve as ground truth for the logprob estimators in
//! [`crate::metrics`].

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for a probability vector passed to [`entropy`].
pub const DIST_TOLERANCE: f64 = 1e-9;
/// Tolerance for the total mass of a [`JointTable`] or a [`ToyModel`] row.
pub const TABLE_TOLERANCE: f64 = 1e-12;
/// Maximum allowed gap between the two routes to I(X;Y).
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("distribution is not normalized: sum = {sum}")]
    NotNormalized { sum: f64 },
    #[error("negative or non-finite probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("empty distribution")]
    Empty,
    #[error("shape {shape:?} does not match {len} entries")]
    ShapeMismatch { shape: Vec<usize>, len: usize },
    #[error("axis {axis} out of range for a {ndim}-axis table")]
    AxisOutOfRange { axis: usize, ndim: usize },
    #[error("axis {0} appears more than once")]
    DuplicateAxis(usize),
    #[error("mutual information needs a 2-axis table, got {0} axes")]
    NotTwoAxis(usize),
    #[error("mutual information routes disagree: {forward} vs {reverse}")]
    AsymmetricMutualInformation { forward: f64, reverse: f64 },
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(char),
    #[error("sequence of length {len} exceeds horizon {horizon}")]
    BeyondHorizon { len: usize, horizon: usize },
    #[error("no conditional distribution for context {0:?}")]
    MissingContext(String),
    #[error("conditional for context {context:?} has {got} entries, vocab has {expected}")]
    RowLength {
        context: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate symbol {0:?} in vocabulary")]
    DuplicateSymbol(char),
}

pub(crate) fn check_distribution(dist: &[f64], tolerance: f64) -> Result<(), OracleError> {
    if dist.is_empty() {
        return Err(OracleError::Empty);
    }
    for (index, &value) in dist.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(OracleError::InvalidProbability { index, value });
        }
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(OracleError::NotNormalized { sum });
    }
    Ok(())
}

/// `p ln p` with the convention `0 ln 0 = 0`.
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats.
pub fn entropy(dist: &[f64]) -> Result<f64, OracleError> {
    check_distribution(dist, DIST_TOLERANCE)?;
    Ok(entropy_unchecked(dist))
}

fn entropy_unchecked(dist: &[f64]) -> f64 {
    // Clamp tiny negative results from rounding on near-point masses.
    (-dist.iter().copied().map(plogp).sum::<f64>()).max(0.0)
}

/// Dense joint distribution over two or more discrete axes, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    shape: Vec<usize>,
    p: Vec<f64>,
    labels: Vec<Vec<String>>,
}

impl JointTable {
    pub fn new(shape: Vec<usize>, p: Vec<f64>) -> Result<Self, OracleError> {
        let labels = shape
            .iter()
            .map(|&n| (0..n).map(|i| i.to_string()).collect())
            .collect();
        Self::with_labels(shape, p, labels)
    }

    pub fn with_labels(
        shape: Vec<usize>,
        p: Vec<f64>,
        labels: Vec<Vec<String>>,
    ) -> Result<Self, OracleError> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || len != p.len() || labels.len() != shape.len() {
            return Err(OracleError::ShapeMismatch {
                shape,
                len: p.len(),
            });
        }
        if labels.iter().zip(&shape).any(|(l, &n)| l.len() != n) {
            return Err(OracleError::ShapeMismatch {
                shape,
                len: p.len(),
            });
        }
        check_distribution(&p, TABLE_TOLERANCE)?;
        Ok(Self { shape, p, labels })
    }

    /// Two-axis table from a matrix indexed `[x][y]`.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self, OracleError> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(OracleError::ShapeMismatch {
                shape: vec![nx, ny],
                len: rows.iter().map(Vec::len).sum(),
            });
        }
        Self::new(vec![nx, ny], rows.concat())
    }

    /// Symmetric Dirichlet(1) joint: normalized unit exponentials.
    pub fn random<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Self {
        let len: usize = shape.iter().product();
        let raw: Vec<f64> = (0..len)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                e.max(f64::MIN_POSITIVE)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let p = raw.into_iter().map(|v| v / total).collect();
        Self::new(shape.to_vec(), p).expect("normalized by construction")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn labels(&self, axis: usize) -> Option<&[String]> {
        self.labels.get(axis).map(Vec::as_slice)
    }

    /// Probability of one full outcome.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.p[self.flat_index(index)]
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.shape.len()];
        for (slot, &n) in out.iter_mut().zip(&self.shape).rev() {
            *slot = flat % n;
            flat /= n;
        }
        out
    }

    fn check_axes(&self, axes: &[usize]) -> Result<(), OracleError> {
        for (i, &a) in axes.iter().enumerate() {
            if a >= self.ndim() {
                return Err(OracleError::AxisOutOfRange {
                    axis: a,
                    ndim: self.ndim(),
                });
            }
            if axes[..i].contains(&a) {
                return Err(OracleError::DuplicateAxis(a));
            }
        }
        Ok(())
    }

    /// Marginal over the listed axes, keyed by the projected outcome.
    pub fn marginal(&self, axes: &[usize]) -> Result<BTreeMap<Vec<usize>, f64>, OracleError> {
        self.check_axes(axes)?;
        let mut out = BTreeMap::new();
        for (flat, &p) in self.p.iter().enumerate() {
            let idx = self.unravel(flat);
            let key: Vec<usize> = axes.iter().map(|&a| idx[a]).collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        Ok(out)
    }

    /// Joint entropy of the listed axes.
    pub fn entropy_of(&self, axes: &[usize]) -> Result<f64, OracleError> {
        let m = self.marginal(axes)?;
        Ok(entropy_unchecked(&m.into_values().collect::<Vec<_>>()))
    }

    /// H(of | given) = Σ_g p(g) H(of | G = g).
    pub fn conditional_entropy(&self, of: usize, given: &[usize]) -> Result<f64, OracleError> {
        let mut axes = vec![of];
        axes.extend_from_slice(given);
        self.check_axes(&axes)?;

        // Group the (of, given) marginal into one conditional row per g.
        let mut rows: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for (key, p) in self.marginal(&axes)? {
            let row = rows
                .entry(key[1..].to_vec())
                .or_insert_with(|| vec![0.0; self.shape[of]]);
            row[key[0]] += p;
        }
        let h = rows
            .values()
            .map(|row| {
                let pg: f64 = row.iter().sum();
                if pg <= 0.0 {
                    return 0.0;
                }
                let cond: Vec<f64> = row.iter().map(|v| v / pg).collect();
                pg * entropy_unchecked(&cond)
            })
            .sum::<f64>();
        Ok(h.max(0.0))
    }

    /// I(X;Y) for a 2-axis table, checked through both H(X) − H(X|Y) and
    /// H(Y) − H(Y|X).
    pub fn mutual_information(&self) -> Result<f64, OracleError> {
        if self.ndim() != 2 {
            return Err(OracleError::NotTwoAxis(self.ndim()));
        }
        let (forward, reverse) = self.mutual_information_routes()?;
        if (forward - reverse).abs() > SYMMETRY_TOLERANCE {
            return Err(OracleError::AsymmetricMutualInformation { forward, reverse });
        }
        Ok(forward.max(0.0))
    }

    /// The two identities for I(X;Y), unreconciled.
    pub fn mutual_information_routes(&self) -> Result<(f64, f64), OracleError> {
        if self.ndim() != 2 {
            return Err(OracleError::NotTwoAxis(self.ndim()));
        }
        let forward = self.entropy_of(&[0])? - self.conditional_entropy(0, &[1])?;
        let reverse = self.entropy_of(&[1])? - self.conditional_entropy(1, &[0])?;
        Ok((forward, reverse))
    }
}

/// Log-probability that may be exactly zero probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogProb {
    Finite(f64),
    Impossible,
}

impl LogProb {
    pub fn finite(self) -> Option<f64> {
        match self {
            LogProb::Finite(v) => Some(v),
            LogProb::Impossible => None,
        }
    }

    /// exp of the log-probability; 0 for an impossible outcome.
    pub fn probability(self) -> f64 {
        match self {
            LogProb::Finite(v) => v.exp(),
            LogProb::Impossible => 0.0,
        }
    }

    fn from_probability(p: f64) -> Self {
        if p > 0.0 {
            LogProb::Finite(p.ln())
        } else {
            LogProb::Impossible
        }
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogProb::Finite(v) => write!(f, "{v:.6}"),
            LogProb::Impossible => f.write_str("impossible"),
        }
    }
}

/// Autoregressive model over single-character symbols with an explicit
/// conditional table for every context it can be asked about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    vocab: Vec<char>,
    conditionals: BTreeMap<String, Vec<f64>>,
    horizon: usize,
}

impl ToyModel {
    /// Builds a model; every context reachable with nonzero probability at
    /// depth < `horizon` must have a row. Extra rows for unreachable contexts
    /// are allowed.
    pub fn new(
        vocab: Vec<char>,
        conditionals: BTreeMap<String, Vec<f64>>,
        horizon: usize,
    ) -> Result<Self, OracleError> {
        for (i, c) in vocab.iter().enumerate() {
            if vocab[..i].contains(c) {
                return Err(OracleError::DuplicateSymbol(*c));
            }
        }
        for (context, row) in &conditionals {
            if row.len() != vocab.len() {
                return Err(OracleError::RowLength {
                    context: context.clone(),
                    got: row.len(),
                    expected: vocab.len(),
                });
            }
            check_distribution(row, TABLE_TOLERANCE)?;
            if let Some(c) = context.chars().find(|c| !vocab.contains(c)) {
                return Err(OracleError::UnknownSymbol(c));
            }
        }
        let model = Self {
            vocab,
            conditionals,
            horizon,
        };
        model.check_reachable(String::new())?;
        Ok(model)
    }

    fn check_reachable(&self, context: String) -> Result<(), OracleError> {
        if context.chars().count() >= self.horizon {
            return Ok(());
        }
        let row = self
            .conditionals
            .get(&context)
            .ok_or_else(|| OracleError::MissingContext(context.clone()))?;
        for (sym, &p) in self.vocab.iter().zip(row) {
            if p > 0.0 {
                let mut next = context.clone();
                next.push(*sym);
                self.check_reachable(next)?;
            }
        }
        Ok(())
    }

    /// Context-free model: every position draws from `dist`.
    pub fn unigram(vocab: Vec<char>, dist: Vec<f64>, horizon: usize) -> Result<Self, OracleError> {
        let mut conditionals = BTreeMap::new();
        for context in all_strings(&vocab, horizon.saturating_sub(1)) {
            conditionals.insert(context, dist.clone());
        }
        Self::new(vocab, conditionals, horizon)
    }

    /// Random full-support model with Dirichlet(1) rows for every context.
    pub fn random<R: Rng + ?Sized>(vocab: Vec<char>, horizon: usize, rng: &mut R) -> Self {
        let mut conditionals = BTreeMap::new();
        for context in all_strings(&vocab, horizon.saturating_sub(1)) {
            let raw: Vec<f64> = (0..vocab.len())
                .map(|_| {
                    let e: f64 = Exp1.sample(rng);
                    e.max(f64::MIN_POSITIVE)
                })
                .collect();
            let total: f64 = raw.iter().sum();
            conditionals.insert(context, raw.into_iter().map(|v| v / total).collect());
        }
        Self::new(vocab, conditionals, horizon).expect("full support by construction")
    }

    /// Two-step model whose first symbol is drawn from the y-marginal of
    /// `joint` and whose second symbol is drawn from p(x | y). The row for the
    /// context `null_symbol` holds the x-marginal, so scoring x after
    /// `null_symbol` reads log p(x). Axis 0 of `joint` is X, axis 1 is Y.
    pub fn from_joint(
        joint: &JointTable,
        x_symbols: &[char],
        y_symbols: &[char],
        null_symbol: char,
    ) -> Result<Self, OracleError> {
        if joint.ndim() != 2 {
            return Err(OracleError::NotTwoAxis(joint.ndim()));
        }
        let (nx, ny) = (joint.shape()[0], joint.shape()[1]);
        if x_symbols.len() != nx || y_symbols.len() != ny {
            return Err(OracleError::ShapeMismatch {
                shape: joint.shape().to_vec(),
                len: x_symbols.len() * y_symbols.len(),
            });
        }
        let mut vocab: Vec<char> = Vec::new();
        for &c in y_symbols.iter().chain(x_symbols).chain([null_symbol].iter()) {
            if !vocab.contains(&c) {
                vocab.push(c);
            }
        }
        let pos = |c: char| vocab.iter().position(|&v| v == c).unwrap();
        let renorm = |row: Vec<f64>| {
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };

        let mut conditionals = BTreeMap::new();
        let mut root = vec![0.0; vocab.len()];
        for (yi, &y) in y_symbols.iter().enumerate() {
            root[pos(y)] = (0..nx).map(|xi| joint.get(&[xi, yi])).sum();
        }
        conditionals.insert(String::new(), renorm(root));

        let mut marginal_x = vec![0.0; vocab.len()];
        for (xi, &x) in x_symbols.iter().enumerate() {
            marginal_x[pos(x)] = (0..ny).map(|yi| joint.get(&[xi, yi])).sum();
        }
        conditionals.insert(null_symbol.to_string(), renorm(marginal_x));

        for (yi, &y) in y_symbols.iter().enumerate() {
            let mut row = vec![0.0; vocab.len()];
            let py: f64 = (0..nx).map(|xi| joint.get(&[xi, yi])).sum();
            if py <= 0.0 {
                continue;
            }
            for (xi, &x) in x_symbols.iter().enumerate() {
                row[pos(x)] = joint.get(&[xi, yi]) / py;
            }
            conditionals.insert(y.to_string(), renorm(row));
        }
        Self::new(vocab, conditionals, 2)
    }

    pub fn vocab(&self) -> &[char] {
        &self.vocab
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Next-symbol distribution after `context`. Both the likelihood and the
    /// sampler read from here.
    pub fn step_distribution(&self, context: &str) -> Result<&[f64], OracleError> {
        self.conditionals
            .get(context)
            .map(Vec::as_slice)
            .ok_or_else(|| OracleError::MissingContext(context.to_string()))
    }

    fn symbol_index(&self, c: char) -> Result<usize, OracleError> {
        self.vocab
            .iter()
            .position(|&v| v == c)
            .ok_or(OracleError::UnknownSymbol(c))
    }

    /// log P(symbol | context) for one step.
    pub fn step_logprob(&self, context: &str, symbol: char) -> Result<LogProb, OracleError> {
        let idx = self.symbol_index(symbol)?;
        if let Some(c) = context.chars().find(|c| !self.vocab.contains(c)) {
            return Err(OracleError::UnknownSymbol(c));
        }
        Ok(LogProb::from_probability(self.step_distribution(context)?[idx]))
    }

    /// Per-step conditional logprobs of `target` continuing `context`.
    pub fn continuation_logprobs(
        &self,
        context: &str,
        target: &str,
    ) -> Result<Vec<LogProb>, OracleError> {
        let len = context.chars().count() + target.chars().count();
        if len > self.horizon {
            return Err(OracleError::BeyondHorizon {
                len,
                horizon: self.horizon,
            });
        }
        let mut prefix = context.to_string();
        let mut out = Vec::with_capacity(target.len());
        let mut possible = true;
        for c in target.chars() {
            // Contexts past a zero-probability step need no table entry.
            let step = if possible {
                self.step_logprob(&prefix, c)?
            } else {
                self.symbol_index(c)?;
                LogProb::Impossible
            };
            possible = step != LogProb::Impossible;
            out.push(step);
            prefix.push(c);
        }
        Ok(out)
    }

    /// Chain-rule log-likelihood of a full sequence.
    pub fn sequence_logprob(&self, seq: &str) -> Result<LogProb, OracleError> {
        let steps = self.continuation_logprobs("", seq)?;
        let mut total = 0.0;
        for step in steps {
            match step {
                LogProb::Finite(v) => total += v,
                LogProb::Impossible => return Ok(LogProb::Impossible),
            }
        }
        Ok(LogProb::Finite(total))
    }

    /// Ancestral sample of `length` symbols.
    pub fn sample_sequence(&self, length: usize, seed: u64) -> Result<String, OracleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(length, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        length: usize,
        rng: &mut R,
    ) -> Result<String, OracleError> {
        if length > self.horizon {
            return Err(OracleError::BeyondHorizon {
                len: length,
                horizon: self.horizon,
            });
        }
        let mut out = String::new();
        for _ in 0..length {
            let row = self.step_distribution(&out)?;
            let u: f64 = rng.random();
            out.push(self.vocab[inverse_cdf(row, u)]);
        }
        Ok(out)
    }

    /// Exact distribution the sampler draws from for sequences of `length`,
    /// obtained by walking the sampler's own step distributions.
    pub fn sampler_distribution(&self, length: usize) -> Result<BTreeMap<String, f64>, OracleError> {
        if length > self.horizon {
            return Err(OracleError::BeyondHorizon {
                len: length,
                horizon: self.horizon,
            });
        }
        let mut frontier = vec![(String::new(), 1.0)];
        for _ in 0..length {
            let mut next = Vec::new();
            for (prefix, mass) in frontier {
                if mass == 0.0 {
                    for &sym in &self.vocab {
                        next.push((format!("{prefix}{sym}"), 0.0));
                    }
                    continue;
                }
                let row = self.step_distribution(&prefix)?;
                for (&sym, &p) in self.vocab.iter().zip(row) {
                    next.push((format!("{prefix}{sym}"), mass * p));
                }
            }
            frontier = next;
        }
        Ok(frontier.into_iter().collect())
    }
}

/// Smallest index whose cumulative mass exceeds `u`; zero-mass entries are
/// never selected.
fn inverse_cdf(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = i;
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// All strings of exactly `len` symbols, in lexicographic vocab order.
pub fn strings_of_length(vocab: &[char], len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| vocab.iter().map(move |&c| format!("{s}{c}")))
            .collect();
    }
    out
}

/// All strings of length 0 through `max_len`.
pub fn all_strings(vocab: &[char], max_len: usize) -> Vec<String> {
    (0..=max_len)
        .flat_map(|n| strings_of_length(vocab, n))
        .collect()
}
