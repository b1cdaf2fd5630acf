//! The noisy-majority learner `A_η`.
//!
//! Training flips every label independently with probability `η` (to a
//! uniformly chosen different label), then memorises the plurality label of
//! each seen atom. Ties are broken uniformly at random. Atoms absent from the
//! training set are answered uniformly at random. With `η = 0` this is the
//! non-private memorising baseline.
//!
//! The learner is `(ε, 0)`-DP with `ε = ln((1 - η)(|Y| - 1) / η)`.

use rand::Rng;

use crate::labels::LabelledDataset;
use crate::special::{binomial_pmf_table, ln_factorial, stable_sum};
use crate::{Error, Result};

/// Largest replicate count accepted by the multi-class exact error oracle.
pub const MAX_MULTICLASS_ENUMERATION: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismParams {
    eta: f64,
    n_labels: usize,
}

impl MechanismParams {
    pub fn new(eta: f64, n_labels: usize) -> Result<Self> {
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::param("eta", format!("{eta} not in [0, 1/2)")));
        }
        if n_labels < 2 {
            return Err(Error::param("n_labels", format!("{n_labels} < 2")));
        }
        Ok(Self { eta, n_labels })
    }

    /// Parameters achieving `(ε, 0)`-DP. `ε = ∞` gives the non-private
    /// memoriser.
    pub fn for_epsilon(epsilon: f64, n_labels: usize) -> Result<Self> {
        Self::new(eta_for_epsilon(epsilon, n_labels)?, n_labels)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Pure-DP parameter; `f64::INFINITY` when `η = 0`.
    pub fn epsilon(&self) -> f64 {
        privacy_of_eta(self.eta, self.n_labels).unwrap_or(f64::INFINITY)
    }
}

/// `ε = ln((1 - η)(|Y| - 1) / η)`.
pub fn privacy_of_eta(eta: f64, n_labels: usize) -> Result<f64> {
    if n_labels < 2 {
        return Err(Error::param("n_labels", format!("{n_labels} < 2")));
    }
    if eta == 0.0 {
        return Err(Error::UnboundedPrivacyLoss);
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::param("eta", format!("{eta} not in (0, 1/2)")));
    }
    Ok(((1.0 - eta) * (n_labels - 1) as f64 / eta).ln())
}

/// Inverse of [`privacy_of_eta`]: `η = (|Y| - 1) / ((|Y| - 1) + e^ε)`.
pub fn eta_for_epsilon(epsilon: f64, n_labels: usize) -> Result<f64> {
    if n_labels < 2 {
        return Err(Error::param("n_labels", format!("{n_labels} < 2")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("{epsilon} must be > 0")));
    }
    let others = (n_labels - 1) as f64;
    let eta = 1.0 / (1.0 + (epsilon - others.ln()).exp());
    if eta >= 0.5 {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} <= ln(|Y| - 1) needs eta >= 1/2"),
        ));
    }
    Ok(eta)
}

/// How unseen atoms are answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnseenPolicy {
    /// Draw the random answers once at training time; the hypothesis is then
    /// a deterministic function.
    #[default]
    Eager,
    /// Draw a fresh uniform label on every query.
    Lazy,
}

/// Something that answers label queries, possibly at random.
pub trait Predictor {
    fn n_labels(&self) -> usize;

    /// Number of atoms the predictor answers for.
    fn domain(&self) -> usize;

    /// Answers a query for atom `x`.
    fn answer<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> u32;

    /// Exact probability, over query-time randomness, that the answer for
    /// `x` differs from `truth`.
    fn error_prob(&self, x: usize, truth: u32) -> f64;
}

/// A learned map from atom to label.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    n_labels: usize,
    committed: Vec<Option<u32>>,
    /// Answers for unseen atoms under [`UnseenPolicy::Eager`]; empty for lazy.
    fallback: Vec<u32>,
}

impl Hypothesis {
    /// Hypothesis answering `label` everywhere, with every atom committed.
    pub fn constant(domain: usize, n_labels: usize, label: u32) -> Self {
        Self {
            n_labels,
            committed: vec![Some(label); domain],
            fallback: Vec::new(),
        }
    }

    /// Label memorised for a seen atom.
    pub fn committed(&self, x: usize) -> Option<u32> {
        self.committed[x]
    }

    pub fn is_lazy(&self) -> bool {
        self.fallback.is_empty() && self.committed.iter().any(Option::is_none)
    }

    /// Deterministic answer, when one exists (committed atoms, or any atom
    /// under eager materialisation).
    pub fn predict(&self, x: usize) -> Option<u32> {
        self.committed[x].or_else(|| self.fallback.get(x).copied())
    }
}

impl Predictor for Hypothesis {
    fn n_labels(&self) -> usize {
        self.n_labels
    }

    fn domain(&self) -> usize {
        self.committed.len()
    }

    fn answer<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> u32 {
        match self.predict(x) {
            Some(y) => y,
            None => rng.random_range(0..self.n_labels) as u32,
        }
    }

    fn error_prob(&self, x: usize, truth: u32) -> f64 {
        match self.predict(x) {
            Some(y) => f64::from(y != truth),
            None => 1.0 - 1.0 / self.n_labels as f64,
        }
    }
}

/// Draws a label uniformly from all labels other than `y`.
fn flip_label<R: Rng + ?Sized>(y: u32, n_labels: usize, rng: &mut R) -> u32 {
    let r = rng.random_range(0..n_labels - 1) as u32;
    if r >= y {
        r + 1
    } else {
        r
    }
}

/// Trains `A_η` with eagerly materialised answers for unseen atoms.
pub fn train_noisy_majority<R: Rng + ?Sized>(
    dataset: &LabelledDataset,
    params: MechanismParams,
    rng: &mut R,
) -> Result<Hypothesis> {
    train_noisy_majority_with(dataset, params, UnseenPolicy::Eager, rng)
}

/// Trains `A_η`. Randomness is consumed in a fixed order: one flip decision
/// per training example, then tie breaks in atom order, then (eager only)
/// unseen-atom answers in atom order.
pub fn train_noisy_majority_with<R: Rng + ?Sized>(
    dataset: &LabelledDataset,
    params: MechanismParams,
    policy: UnseenPolicy,
    rng: &mut R,
) -> Result<Hypothesis> {
    let n_labels = params.n_labels;
    if dataset.n_labels() != n_labels {
        return Err(Error::param(
            "n_labels",
            format!(
                "mechanism expects {n_labels} labels, dataset has {}",
                dataset.n_labels()
            ),
        ));
    }
    let domain = dataset.domain_size();
    let mut tally = vec![0u32; domain * n_labels];
    for (&x, &y) in dataset.draws().iter().zip(dataset.labels()) {
        let noisy = if rng.random::<f64>() < params.eta {
            flip_label(y, n_labels, rng)
        } else {
            y
        };
        tally[x * n_labels + noisy as usize] += 1;
    }

    let mut committed = vec![None; domain];
    let mut tied = Vec::with_capacity(n_labels);
    for (x, slot) in committed.iter_mut().enumerate() {
        let row = &tally[x * n_labels..(x + 1) * n_labels];
        let best = *row.iter().max().expect("n_labels >= 2");
        if best == 0 {
            continue;
        }
        tied.clear();
        tied.extend((0..n_labels as u32).filter(|&y| row[y as usize] == best));
        *slot = Some(if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.random_range(0..tied.len())]
        });
    }

    let fallback = match policy {
        UnseenPolicy::Lazy => Vec::new(),
        UnseenPolicy::Eager => committed
            .iter()
            .map(|c| match c {
                Some(y) => *y,
                None => rng.random_range(0..n_labels) as u32,
            })
            .collect(),
    };
    Ok(Hypothesis {
        n_labels,
        committed,
        fallback,
    })
}

/// Exact probability that `A_η` misclassifies an atom with `copies` clean
/// replicates, including uniform tie breaking and the uniform answer for
/// unseen atoms.
///
/// Binary labels use the closed form `P[F > l/2] + P[F = l/2] / 2` with
/// `F ~ Bin(l, η)` the number of flips. More labels are enumerated
/// exhaustively over multinomial outcome classes, up to
/// [`MAX_MULTICLASS_ENUMERATION`] copies.
pub fn exact_point_error(copies: u64, eta: f64, n_labels: usize) -> Result<f64> {
    if n_labels < 2 {
        return Err(Error::param("n_labels", format!("{n_labels} < 2")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param("eta", format!("{eta} not in [0, 1]")));
    }
    if copies == 0 {
        return Ok(1.0 - 1.0 / n_labels as f64);
    }
    if n_labels == 2 {
        let pmf = binomial_pmf_table(copies, eta);
        let half = copies / 2;
        let strict = stable_sum(pmf[(half as usize + 1)..].iter().copied());
        let tie = if copies.is_multiple_of(2) {
            pmf[half as usize]
        } else {
            0.0
        };
        return Ok(strict + 0.5 * tie);
    }
    if copies > MAX_MULTICLASS_ENUMERATION {
        return Err(Error::EnumerationTooLarge(format!(
            "{copies} copies with {n_labels} labels (limit {MAX_MULTICLASS_ENUMERATION})"
        )));
    }
    Ok(multiclass_error(copies, eta, n_labels))
}

/// Enumerates the count `c` kept on the true label and every partition of
/// the remaining `l - c` copies over the other labels, weighting each
/// partition by its number of label arrangements.
fn multiclass_error(copies: u64, eta: f64, n_labels: usize) -> f64 {
    let others = (n_labels - 1) as u64;
    let q = eta / others as f64;
    let ln_fact = |n: u64| ln_factorial(n as f64);
    let mut correct = 0.0;
    for kept in 1..=copies {
        let rest = copies - kept;
        let ln_base = ln_fact(copies) - ln_fact(kept)
            + kept as f64 * ln_or_neg_inf(1.0 - eta)
            + rest as f64 * ln_or_neg_inf(q);
        if ln_base == f64::NEG_INFINITY {
            continue;
        }
        let mut parts = Vec::new();
        for_each_partition(rest, kept, others as usize, &mut parts, &mut |parts| {
            let zeros = others - parts.len() as u64;
            let mut ln_arrangements = ln_fact(others) - ln_fact(zeros);
            let mut ln_denominator = 0.0;
            let mut i = 0;
            while i < parts.len() {
                let mut j = i;
                while j < parts.len() && parts[j] == parts[i] {
                    j += 1;
                }
                ln_arrangements -= ln_fact((j - i) as u64);
                i = j;
            }
            for &part in parts.iter() {
                ln_denominator += ln_fact(part);
            }
            let ties = parts.iter().filter(|&&v| v == kept).count();
            let weight = (ln_base + ln_arrangements - ln_denominator).exp();
            correct += weight / (1 + ties) as f64;
        });
    }
    1.0 - correct
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// Calls `f` with every non-increasing sequence of positive parts summing to
/// `total`, each part at most `max_part`, with at most `max_len` parts.
fn for_each_partition(
    total: u64,
    max_part: u64,
    max_len: usize,
    parts: &mut Vec<u64>,
    f: &mut dyn FnMut(&[u64]),
) {
    if total == 0 {
        f(parts);
        return;
    }
    if parts.len() == max_len {
        return;
    }
    let top = total.min(max_part);
    for part in (1..=top).rev() {
        parts.push(part);
        for_each_partition(total - part, part, max_len, parts, f);
        parts.pop();
    }
}

/// Binary tie-inclusive failure statistic `P[K <= l/2]`, `K ~ Bin(l, 1-η)`
/// the number of unflipped copies. Counts every tie as a failure.
pub fn tie_inclusive_failure(copies: u64, eta: f64) -> f64 {
    let pmf = binomial_pmf_table(copies, eta);
    // K <= l/2  <=>  flips >= l - floor(l/2)
    let from = (copies - copies / 2) as usize;
    stable_sum(pmf[from..].iter().copied())
}

/// Binary tie-exclusive failure statistic `P[K < l/2]`.
pub fn tie_exclusive_failure(copies: u64, eta: f64) -> f64 {
    let pmf = binomial_pmf_table(copies, eta);
    // K < l/2  <=>  flips > l/2
    let from = (copies / 2 + 1) as usize;
    stable_sum(pmf.get(from..).unwrap_or(&[]).iter().copied())
}

/// Per-query randomized response around another predictor: keep the inner
/// answer with probability `e^ε / (e^ε + |Y| - 1)`, otherwise answer a
/// uniformly chosen different label. Each answer is `(ε, 0)`-DP with respect
/// to the inner answer; repeated queries compose.
#[derive(Debug, Clone)]
pub struct RandomizedResponse<'a, P> {
    inner: &'a P,
    keep: f64,
}

impl<'a, P: Predictor> RandomizedResponse<'a, P> {
    pub fn new(inner: &'a P, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("{epsilon} must be > 0")));
        }
        let others = (inner.n_labels() - 1) as f64;
        let keep = 1.0 / (1.0 + others * (-epsilon).exp());
        Ok(Self { inner, keep })
    }

    pub fn keep_probability(&self) -> f64 {
        self.keep
    }
}

pub fn randomized_response_wrap<P: Predictor>(
    inner: &P,
    epsilon: f64,
) -> Result<RandomizedResponse<'_, P>> {
    RandomizedResponse::new(inner, epsilon)
}

impl<P: Predictor> Predictor for RandomizedResponse<'_, P> {
    fn n_labels(&self) -> usize {
        self.inner.n_labels()
    }

    fn domain(&self) -> usize {
        self.inner.domain()
    }

    fn answer<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> u32 {
        let y = self.inner.answer(x, rng);
        if self.keep >= 1.0 || rng.random::<f64>() < self.keep {
            y
        } else {
            flip_label(y, self.n_labels(), rng)
        }
    }

    fn error_prob(&self, x: usize, truth: u32) -> f64 {
        let wrong = self.inner.error_prob(x, truth);
        let others = (self.n_labels() - 1) as f64;
        let flip = 1.0 - self.keep;
        // correct inner answer survives unless flipped; a wrong one becomes
        // correct only if flipped onto the truth
        (1.0 - wrong) * flip + wrong * (1.0 - flip / others)
    }
}
