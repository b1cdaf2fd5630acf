//! The `(p, N, k)` long-tailed distribution.
//!
//! The domain is a flat range of subpopulation indices. Indices
//! `0..n_majority` are the heavy majority atoms (mass `1/k` each) and
//! `n_majority..n_majority + N` are the light minority atoms (mass `p/N`
//! each).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::special::{binomial_pmf, ln_choose, stable_sum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Majority,
    Minority,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Majority => "majority",
            Group::Minority => "minority",
        }
    }
}

/// Long-tailed distribution with `n_majority` atoms of mass `1/k` and
/// `n_minority` atoms sharing total mass `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    p: f64,
    k: f64,
    n_minority: usize,
    n_majority: usize,
}

impl DistributionSpec {
    /// Builds the distribution, snapping `k` to the nearest value for which
    /// `(1 - p) k` is an integer.
    pub fn long_tail(p: f64, k: f64, n_minority: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", format!("{p} not in (0, 1)")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::param("k", format!("{k} must be positive")));
        }
        if n_minority == 0 {
            return Err(Error::param("N", "need at least one minority atom"));
        }
        let n_majority = ((1.0 - p) * k).round();
        if n_majority < 2.0 {
            return Err(Error::param(
                "k",
                format!("(1-p)k rounds to {n_majority}, need at least 2 majority atoms"),
            ));
        }
        let n_majority = n_majority as usize;
        let k = n_majority as f64 / (1.0 - p);
        if p / n_minority as f64 >= 1.0 / k {
            return Err(Error::param(
                "N",
                format!(
                    "minority atom mass {} is not lighter than majority atom mass {}",
                    p / n_minority as f64,
                    1.0 / k
                ),
            ));
        }
        Ok(Self {
            p,
            k,
            n_minority,
            n_majority,
        })
    }

    /// Minority mass `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Adjusted `k` (reciprocal of a majority atom's mass).
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_minority(&self) -> usize {
        self.n_minority
    }

    pub fn n_majority(&self) -> usize {
        self.n_majority
    }

    pub fn domain_size(&self) -> usize {
        self.n_majority + self.n_minority
    }

    pub fn majority_atom_mass(&self) -> f64 {
        1.0 / self.k
    }

    pub fn minority_atom_mass(&self) -> f64 {
        self.p / self.n_minority as f64
    }

    pub fn group_of(&self, x: usize) -> Result<Group> {
        if x < self.n_majority {
            Ok(Group::Majority)
        } else if x < self.domain_size() {
            Ok(Group::Minority)
        } else {
            Err(Error::OutOfDomain {
                index: x,
                domain: self.domain_size(),
            })
        }
    }

    pub fn group_size(&self, group: Group) -> usize {
        match group {
            Group::Majority => self.n_majority,
            Group::Minority => self.n_minority,
        }
    }

    /// Index range of a group.
    pub fn group_range(&self, group: Group) -> std::ops::Range<usize> {
        match group {
            Group::Majority => 0..self.n_majority,
            Group::Minority => self.n_majority..self.domain_size(),
        }
    }

    /// Probability of subpopulation `x`.
    pub fn pmf(&self, x: usize) -> Result<f64> {
        Ok(match self.group_of(x)? {
            Group::Majority => self.majority_atom_mass(),
            Group::Minority => self.minority_atom_mass(),
        })
    }

    /// Full distribution as a weight vector over the domain.
    pub fn weights(&self) -> AtomWeights {
        let mut w = vec![self.majority_atom_mass(); self.domain_size()];
        for v in &mut w[self.n_majority..] {
            *v = self.minority_atom_mass();
        }
        AtomWeights(w)
    }

    /// Distribution conditioned on `group`: uniform over that group's atoms,
    /// zero elsewhere.
    pub fn group_marginal(&self, group: Group) -> AtomWeights {
        let mut w = vec![0.0; self.domain_size()];
        let mass = 1.0 / self.group_size(group) as f64;
        for v in &mut w[self.group_range(group)] {
            *v = mass;
        }
        AtomWeights(w)
    }

    /// Draws `m` i.i.d. subpopulations. Each draw first picks its group
    /// (minority with probability `p`), then an atom uniformly inside it.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> UnlabelledDataset {
        let draws = (0..m)
            .map(|_| {
                if rng.random::<f64>() < self.p {
                    self.n_majority + rng.random_range(0..self.n_minority)
                } else {
                    rng.random_range(0..self.n_majority)
                }
            })
            .collect();
        UnlabelledDataset { spec: *self, draws }
    }

    /// Expected number of minority atoms that appear exactly `l` times among
    /// `m2` minority draws: `N C(m2, l) (1/N)^l (1 - 1/N)^(m2 - l)`.
    pub fn expected_occupancy(&self, m2: u64, l: u64) -> Result<f64> {
        if l > m2 {
            return Err(Error::param("l", format!("{l} exceeds m2 = {m2}")));
        }
        let n = self.n_minority as f64;
        if self.n_minority == 1 {
            return Ok(if l == m2 { 1.0 } else { 0.0 });
        }
        let q = 1.0 / n;
        let ln = n.ln() + ln_choose(m2, l) + l as f64 * q.ln() + (m2 - l) as f64 * (-q).ln_1p();
        Ok(ln.exp())
    }

    /// Expected number of atoms of `group` that appear exactly `l` times in
    /// an unconditioned sample of size `m`. Each such atom's count is
    /// `Bin(m, mass)`.
    pub fn expected_group_occupancy(&self, group: Group, m: u64, l: u64) -> f64 {
        let mass = match group {
            Group::Majority => self.majority_atom_mass(),
            Group::Minority => self.minority_atom_mass(),
        };
        self.group_size(group) as f64 * binomial_pmf(m, mass, l)
    }
}

/// Free-function form of [`DistributionSpec::long_tail`].
pub fn make_long_tail(p: f64, k: f64, n_minority: usize) -> Result<DistributionSpec> {
    DistributionSpec::long_tail(p, k, n_minority)
}

/// A probability weight per domain index.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomWeights(pub Vec<f64>);

impl AtomWeights {
    pub fn total(&self) -> f64 {
        stable_sum(self.0.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `m` draws from a [`DistributionSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabelledDataset {
    spec: DistributionSpec,
    draws: Vec<usize>,
}

impl UnlabelledDataset {
    /// Wraps explicit draws, checking every index is in the domain.
    pub fn from_draws(spec: DistributionSpec, draws: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = draws.iter().find(|&&x| x >= spec.domain_size()) {
            return Err(Error::OutOfDomain {
                index: bad,
                domain: spec.domain_size(),
            });
        }
        Ok(Self { spec, draws })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn draws(&self) -> &[usize] {
        &self.draws
    }

    pub fn m(&self) -> usize {
        self.draws.len()
    }

    /// Number of minority draws (`m2`).
    pub fn minority_draws(&self) -> usize {
        let n_maj = self.spec.n_majority();
        self.draws.iter().filter(|&&x| x >= n_maj).count()
    }

    /// Occurrence count for each domain index.
    pub fn counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.spec.domain_size()];
        for &x in &self.draws {
            counts[x] += 1;
        }
        counts
    }

    pub fn histogram(&self) -> OccupancyHistogram {
        OccupancyHistogram::from_counts(&self.spec, &self.counts())
    }
}

/// For each group, how many distinct atoms appear exactly `l` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyHistogram {
    /// `majority[l]` for `l >= 1`; index 0 holds the unseen count.
    majority: Vec<usize>,
    minority: Vec<usize>,
    m: usize,
    m2: usize,
}

impl OccupancyHistogram {
    fn from_counts(spec: &DistributionSpec, counts: &[u32]) -> Self {
        let hist = |range: std::ops::Range<usize>| {
            let mut h = vec![0usize; 1];
            for &c in &counts[range] {
                let c = c as usize;
                if c >= h.len() {
                    h.resize(c + 1, 0);
                }
                h[c] += 1;
            }
            h
        };
        let majority = hist(spec.group_range(Group::Majority));
        let minority = hist(spec.group_range(Group::Minority));
        let m2 = counts[spec.group_range(Group::Minority)]
            .iter()
            .map(|&c| c as usize)
            .sum();
        let m = counts.iter().map(|&c| c as usize).sum();
        Self {
            majority,
            minority,
            m,
            m2,
        }
    }

    /// Number of distinct atoms of `group` appearing exactly `l` times
    /// (`l = 0` counts unseen atoms).
    pub fn count(&self, group: Group, l: usize) -> usize {
        let h = match group {
            Group::Majority => &self.majority,
            Group::Minority => &self.minority,
        };
        h.get(l).copied().unwrap_or(0)
    }

    /// Count summed over both groups.
    pub fn total(&self, l: usize) -> usize {
        self.count(Group::Majority, l) + self.count(Group::Minority, l)
    }

    /// Largest occurrence count present in `group`.
    pub fn max_occurrence(&self, group: Group) -> usize {
        match group {
            Group::Majority => self.majority.len() - 1,
            Group::Minority => self.minority.len() - 1,
        }
    }

    pub fn distinct_seen(&self, group: Group) -> usize {
        (1..=self.max_occurrence(group))
            .map(|l| self.count(group, l))
            .sum()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m2(&self) -> usize {
        self.m2
    }
}

/// Free-function form of [`UnlabelledDataset::histogram`].
pub fn occurrence_histogram(dataset: &UnlabelledDataset) -> OccupancyHistogram {
    dataset.histogram()
}
