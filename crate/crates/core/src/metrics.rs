//! Error and accuracy discrepancy.
//!
//! Error is `E_{S, f, h}[ Σ_x w(x) P[h(x) != f(x)] ]` for a weighting `w`
//! (the full distribution, or one group's marginal). The inner sum over `x`
//! is computed exactly; `S`, `f` and the learner's randomness are sampled
//! once per trial. Accuracy discrepancy is minority error minus overall
//! error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{AtomWeights, DistributionSpec, Group};
use crate::labels::{LabelPrior, LabelledDataset, Labelling};
use crate::mechanism::{
    train_noisy_majority_with, Hypothesis, MechanismParams, Predictor, UnseenPolicy,
};
use crate::special::{derive_seed, mean_and_stderr, stable_sum, KahanSum};
use crate::{rng_from_seed, Error, Result, SimRng};

/// A training procedure: deterministic given the dataset and generator.
pub trait Learner: Sync {
    fn name(&self) -> String;

    fn train(&self, data: &LabelledDataset, rng: &mut SimRng) -> Result<Hypothesis>;
}

/// `A_η` as a [`Learner`].
#[derive(Debug, Clone, Copy)]
pub struct NoisyMajority {
    pub params: MechanismParams,
    pub policy: UnseenPolicy,
}

impl NoisyMajority {
    pub fn new(params: MechanismParams) -> Self {
        Self {
            params,
            policy: UnseenPolicy::Eager,
        }
    }
}

impl Learner for NoisyMajority {
    fn name(&self) -> String {
        format!("noisy-majority(eta={})", self.params.eta())
    }

    fn train(&self, data: &LabelledDataset, rng: &mut SimRng) -> Result<Hypothesis> {
        train_noisy_majority_with(data, self.params, self.policy, rng)
    }
}

/// Ignores the data and always answers one label.
#[derive(Debug, Clone, Copy)]
pub struct ConstantLearner {
    pub label: u32,
}

impl Learner for ConstantLearner {
    fn name(&self) -> String {
        format!("constant({})", self.label)
    }

    fn train(&self, data: &LabelledDataset, _rng: &mut SimRng) -> Result<Hypothesis> {
        if self.label as usize >= data.n_labels() {
            return Err(Error::param(
                "label",
                format!("{} >= {}", self.label, data.n_labels()),
            ));
        }
        Ok(Hypothesis::constant(
            data.domain_size(),
            data.n_labels(),
            self.label,
        ))
    }
}

/// `Σ_x w(x) P[h(x) != f(x)]` for one trained hypothesis.
pub fn expected_error_given_run<P: Predictor>(
    h: &P,
    f: &Labelling,
    weight: &AtomWeights,
) -> Result<f64> {
    if weight.len() != f.domain() {
        return Err(Error::param(
            "weight",
            format!(
                "{} weights for a labelling over {} atoms",
                weight.len(),
                f.domain()
            ),
        ));
    }
    let mut acc = KahanSum::new();
    for (x, &w) in weight.as_slice().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        if x >= h.domain() {
            return Err(Error::OutOfDomain {
                index: x,
                domain: h.domain(),
            });
        }
        acc.add(w * h.error_prob(x, f.label(x)));
    }
    Ok(acc.value())
}

/// Mean with standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let (mean, stderr) = mean_and_stderr(values);
        Self { mean, stderr }
    }
}

/// Per-trial quantities, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub err_overall: f64,
    pub err_minority: f64,
    pub err_majority: f64,
    /// Mean misclassification over atoms seen `1..=rare_max` times.
    pub rare_error: Option<f64>,
    /// For `l = 0..=max_occurrence`: (summed misclassification, atom count).
    pub by_occurrence: Vec<(f64, u64)>,
}

impl TrialOutcome {
    pub fn gamma(&self) -> f64 {
        self.err_minority - self.err_overall
    }
}

/// Pooled misclassification over all atoms seen exactly `l` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceError {
    pub l: u32,
    pub atoms: u64,
    /// Zero when no atom had this count.
    pub rate: f64,
    /// Binomial standard error of the pooled rate.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub learner: String,
    pub err_overall: Estimate,
    pub err_minority: Estimate,
    pub err_majority: Estimate,
    /// `err_minority.mean - err_overall.mean`; standard error from the
    /// per-trial differences.
    pub gamma: Estimate,
    pub rare_max: u32,
    pub rare_error: Option<Estimate>,
    pub by_occurrence: Vec<OccurrenceError>,
    pub trials: usize,
    pub master_seed: u64,
    pub per_trial: Vec<TrialOutcome>,
}

/// Accuracy discrepancy of a report: minority error minus overall error.
pub fn gamma_of(report: &MetricsReport) -> f64 {
    report.err_minority.mean - report.err_overall.mean
}

/// Knobs for [`mc_metrics_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub trials: usize,
    pub master_seed: u64,
    /// Atoms seen at least once and at most this many times count as rare.
    pub rare_max: u32,
    /// Per-occurrence breakdown is kept for `l = 0..=max_occurrence`.
    pub max_occurrence: u32,
}

impl McOptions {
    pub fn new(trials: usize, master_seed: u64) -> Self {
        Self {
            trials,
            master_seed,
            rare_max: 4,
            max_occurrence: 8,
        }
    }
}

/// Monte-Carlo error and accuracy discrepancy with default options.
pub fn mc_metrics(
    learner: &dyn Learner,
    spec: &DistributionSpec,
    prior: &LabelPrior,
    m: usize,
    trials: usize,
    master_seed: u64,
) -> Result<MetricsReport> {
    mc_metrics_with(
        learner,
        spec,
        prior,
        m,
        &McOptions::new(trials, master_seed),
    )
}

/// Runs `opts.trials` independent trials in parallel. Trial `t` uses its own
/// generator seeded from `(master_seed, t)` and draws, in order, the
/// labelling, the sample and the learner's randomness. Aggregation happens in
/// trial order, so the report does not depend on scheduling.
pub fn mc_metrics_with(
    learner: &dyn Learner,
    spec: &DistributionSpec,
    prior: &LabelPrior,
    m: usize,
    opts: &McOptions,
) -> Result<MetricsReport> {
    if opts.trials < 2 {
        return Err(Error::param("trials", format!("{} < 2", opts.trials)));
    }
    if m == 0 {
        return Err(Error::param("m", "sample size must be positive"));
    }
    if prior.domain() != spec.domain_size() {
        return Err(Error::param(
            "prior",
            format!(
                "prior covers {} atoms, distribution has {}",
                prior.domain(),
                spec.domain_size()
            ),
        ));
    }

    let outcomes = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(learner, spec, prior, m, opts, t).map_err(|e| Error::Trial {
                trial: t,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(summarise(learner.name(), opts, outcomes))
}

fn run_trial(
    learner: &dyn Learner,
    spec: &DistributionSpec,
    prior: &LabelPrior,
    m: usize,
    opts: &McOptions,
    trial: usize,
) -> Result<TrialOutcome> {
    let mut rng = rng_from_seed(derive_seed(opts.master_seed, trial as u64));
    let f = prior.sample_labelling(&mut rng);
    let sample = spec.sample(m, &mut rng);
    let data = f.label_dataset(&sample)?;
    let h = learner.train(&data, &mut rng)?;
    if h.domain() != spec.domain_size() {
        return Err(Error::param(
            "hypothesis",
            "domain does not match the distribution",
        ));
    }

    let counts = sample.counts();
    let mut overall = KahanSum::new();
    let mut by_group = [KahanSum::new(), KahanSum::new()];
    let mut rare = (KahanSum::new(), 0u64);
    let mut by_occurrence = vec![(KahanSum::new(), 0u64); opts.max_occurrence as usize + 1];
    let maj_mass = spec.majority_atom_mass();
    let min_mass = spec.minority_atom_mass();
    for (x, &l) in counts.iter().enumerate() {
        let e = h.error_prob(x, f.label(x));
        let (g, mass) = if x < spec.n_majority() {
            (0, maj_mass)
        } else {
            (1, min_mass)
        };
        overall.add(mass * e);
        by_group[g].add(e);
        if (1..=opts.rare_max).contains(&l) {
            rare.0.add(e);
            rare.1 += 1;
        }
        if let Some(slot) = by_occurrence.get_mut(l as usize) {
            slot.0.add(e);
            slot.1 += 1;
        }
    }
    Ok(TrialOutcome {
        err_overall: overall.value(),
        err_majority: by_group[0].value() / spec.group_size(Group::Majority) as f64,
        err_minority: by_group[1].value() / spec.group_size(Group::Minority) as f64,
        rare_error: (rare.1 > 0).then(|| rare.0.value() / rare.1 as f64),
        by_occurrence: by_occurrence
            .into_iter()
            .map(|(s, n)| (s.value(), n))
            .collect(),
    })
}

fn summarise(learner: String, opts: &McOptions, per_trial: Vec<TrialOutcome>) -> MetricsReport {
    let col = |f: fn(&TrialOutcome) -> f64| per_trial.iter().map(f).collect::<Vec<_>>();
    let err_overall = Estimate::from_samples(&col(|t| t.err_overall));
    let err_minority = Estimate::from_samples(&col(|t| t.err_minority));
    let err_majority = Estimate::from_samples(&col(|t| t.err_majority));
    let gamma = Estimate {
        mean: err_minority.mean - err_overall.mean,
        stderr: Estimate::from_samples(&col(TrialOutcome::gamma)).stderr,
    };
    let rare: Vec<f64> = per_trial.iter().filter_map(|t| t.rare_error).collect();
    let rare_error = (rare.len() >= 2).then(|| Estimate::from_samples(&rare));

    let by_occurrence = (0..=opts.max_occurrence as usize)
        .map(|l| {
            let wrong = stable_sum(per_trial.iter().map(|t| t.by_occurrence[l].0));
            let atoms: u64 = per_trial.iter().map(|t| t.by_occurrence[l].1).sum();
            let (rate, stderr) = if atoms > 0 {
                let rate = wrong / atoms as f64;
                (rate, (rate * (1.0 - rate) / atoms as f64).sqrt())
            } else {
                (0.0, 0.0)
            };
            OccurrenceError {
                l: l as u32,
                atoms,
                rate,
                stderr,
            }
        })
        .collect();

    MetricsReport {
        learner,
        err_overall,
        err_minority,
        err_majority,
        gamma,
        rare_max: opts.rare_max,
        rare_error,
        by_occurrence,
        trials: per_trial.len(),
        master_seed: opts.master_seed,
        per_trial,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::make_long_tail;
    use crate::labels::make_prior_uniform;

    #[test]
    fn exact_error_extremes() {
        let spec = make_long_tail(0.2, 10.0, 1000).unwrap();
        let d = spec.domain_size();
        let f = Labelling::new(vec![1; d], 2).unwrap();
        let right = Hypothesis::constant(d, 2, 1);
        let wrong = Hypothesis::constant(d, 2, 0);
        let w = spec.weights();
        assert_eq!(expected_error_given_run(&right, &f, &w).unwrap(), 0.0);
        assert!((expected_error_given_run(&wrong, &f, &w).unwrap() - 1.0).abs() < 1e-12);

        let mut labels = vec![1u32; d];
        labels[500] = 0;
        let one_off = Labelling::new(labels, 2).unwrap();
        let e = expected_error_given_run(&right, &one_off, &w).unwrap();
        assert!((e - 2e-4).abs() < 1e-15);
        let e2 = expected_error_given_run(&right, &one_off, &spec.group_marginal(Group::Minority))
            .unwrap();
        assert!((e2 - 1e-3).abs() < 1e-15);

        let short = Hypothesis::constant(5, 2, 1);
        assert!(expected_error_given_run(&short, &f, &w).is_err());
    }

    #[test]
    fn gamma_arithmetic() {
        let mk = |min: f64, all: f64| MetricsReport {
            learner: String::new(),
            err_overall: Estimate {
                mean: all,
                stderr: 0.0,
            },
            err_minority: Estimate {
                mean: min,
                stderr: 0.0,
            },
            err_majority: Estimate {
                mean: 0.0,
                stderr: 0.0,
            },
            gamma: Estimate {
                mean: min - all,
                stderr: 0.0,
            },
            rare_max: 4,
            rare_error: None,
            by_occurrence: vec![],
            trials: 2,
            master_seed: 0,
            per_trial: vec![],
        };
        assert!((gamma_of(&mk(0.7, 0.2)) - 0.5).abs() < 1e-15);
        assert_eq!(gamma_of(&mk(0.3, 0.3)), 0.0);
        assert!((gamma_of(&mk(0.1, 0.3)) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_classifier_is_fair_on_symmetric_prior() {
        let spec = make_long_tail(0.2, 10.0, 200).unwrap();
        let prior = make_prior_uniform(spec.domain_size(), 2).unwrap();
        let r = mc_metrics(&ConstantLearner { label: 0 }, &spec, &prior, 500, 400, 3).unwrap();
        assert!((r.err_overall.mean - 0.5).abs() < 4.0 * r.err_overall.stderr);
        assert!(r.gamma.mean.abs() < 4.0 * r.gamma.stderr.max(1e-12));
    }

    #[test]
    fn decomposition_identities_hold_per_trial() {
        let spec = make_long_tail(0.3, 12.0, 400).unwrap();
        let prior = make_prior_uniform(spec.domain_size(), 3).unwrap();
        let learner = NoisyMajority::new(MechanismParams::new(0.2, 3).unwrap());
        let r = mc_metrics(&learner, &spec, &prior, 800, 20, 5).unwrap();
        let p = spec.p();
        for t in &r.per_trial {
            let mix = (1.0 - p) * t.err_majority + p * t.err_minority;
            assert!((t.err_overall - mix).abs() < 1e-10);
            let g = (1.0 - p) * (t.err_minority - t.err_majority);
            assert!((t.gamma() - g).abs() < 1e-10);
        }
        assert_eq!(r.gamma.mean, r.err_minority.mean - r.err_overall.mean);
    }

    #[test]
    fn reports_are_reproducible() {
        let spec = make_long_tail(0.2, 10.0, 300).unwrap();
        let prior = make_prior_uniform(spec.domain_size(), 2).unwrap();
        let learner = NoisyMajority::new(MechanismParams::new(0.3, 2).unwrap());
        let a = mc_metrics(&learner, &spec, &prior, 600, 16, 99).unwrap();
        let b = mc_metrics(&learner, &spec, &prior, 600, 16, 99).unwrap();
        assert_eq!(a, b);
        let c = mc_metrics(&learner, &spec, &prior, 600, 16, 100).unwrap();
        assert_ne!(a.err_overall, c.err_overall);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = make_long_tail(0.2, 10.0, 300).unwrap();
        let prior = make_prior_uniform(spec.domain_size(), 2).unwrap();
        let learner = ConstantLearner { label: 0 };
        assert!(mc_metrics(&learner, &spec, &prior, 10, 1, 0).is_err());
        assert!(mc_metrics(&learner, &spec, &prior, 0, 4, 0).is_err());
        let small = make_prior_uniform(5, 2).unwrap();
        assert!(mc_metrics(&learner, &spec, &small, 10, 4, 0).is_err());
        let bad = ConstantLearner { label: 7 };
        assert!(matches!(
            mc_metrics(&bad, &spec, &prior, 10, 4, 0),
            Err(Error::Trial { .. })
        ));
    }
}
