//! Flat `key=value` experiment configuration.
//!
//! One pair per line, `#` starts a comment, keys carry a dotted section
//! prefix. Unknown and repeated keys are errors.
//!
//! ```text
//! dist.p = 0.2
//! dist.k = 64
//! dist.c = 0.1          # or dist.n = <minority atoms>
//! dist.m = 10000
//! prior.preset = uniform  # uniform | skewed:<top> | table
//! prior.labels = 2
//! mech.eps = 1            # or mech.eta; "inf" means eta = 0
//! mech.delta = 1e-3
//! metrics.trials = 200
//! metrics.seed = 7
//! sweep.var = eps         # eps | eta | c | m | p | k
//! sweep.grid = 0.05, 0.1, 0.5, 1, 2, 5
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::distribution::DistributionSpec;
use crate::labels::LabelPrior;
use crate::mechanism::{eta_for_epsilon, privacy_of_eta, MechanismParams, UnseenPolicy};
use crate::metrics::NoisyMajority;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Size {
    /// `N = ⌈c m⌉`.
    Ratio(f64),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorPreset {
    Uniform,
    /// Mass `top` on label 0 for every atom.
    Skewed(f64),
    /// Explicit label rows per group.
    Table {
        majority: Vec<f64>,
        minority: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Epsilon(f64),
    Eta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVar {
    Eps,
    Eta,
    C,
    M,
    P,
    K,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Eps => "eps",
            SweepVar::Eta => "eta",
            SweepVar::C => "c",
            SweepVar::M => "m",
            SweepVar::P => "p",
            SweepVar::K => "k",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "eps" | "epsilon" => SweepVar::Eps,
            "eta" => SweepVar::Eta,
            "c" => SweepVar::C,
            "m" => SweepVar::M,
            "p" => SweepVar::P,
            "k" => SweepVar::K,
            other => {
                return Err(Error::ConfigValue(format!(
                    "unknown sweep variable `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: f64,
    pub k: f64,
    pub size: Size,
    pub m: usize,
    pub prior: PriorPreset,
    pub n_labels: usize,
    pub level: Level,
    pub delta: f64,
    pub unseen: UnseenPolicy,
    pub trials: usize,
    pub seed: u64,
    pub sweep: Option<Sweep>,
    pub output: Option<PathBuf>,
    /// `α` of the strict-privacy regime check.
    pub alpha: f64,
    /// Atoms seen `1..=rare_max` times count as rare.
    pub rare_max: u32,
    /// Overall accuracy at which a sweep row counts as high-accuracy.
    pub accuracy_threshold: f64,
    pub sigma: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            p: 0.2,
            k: 10.0,
            size: Size::Ratio(0.1),
            m: 10_000,
            prior: PriorPreset::Uniform,
            n_labels: 2,
            level: Level::Epsilon(1.0),
            delta: 1e-3,
            unseen: UnseenPolicy::Eager,
            trials: 200,
            seed: 0,
            sweep: None,
            output: None,
            alpha: 1.0,
            rare_max: 4,
            accuracy_threshold: 0.8,
            sigma: 0.1,
        }
    }
}

/// Fully resolved parameters of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub p: f64,
    pub k: f64,
    pub n_minority: usize,
    pub m: usize,
    pub eta: f64,
    pub epsilon: f64,
}

impl Point {
    /// Realised ratio `N / m`.
    pub fn c(&self) -> f64 {
        self.n_minority as f64 / self.m as f64
    }

    pub fn spec(&self) -> Result<DistributionSpec> {
        DistributionSpec::long_tail(self.p, self.k, self.n_minority)
    }

    pub fn mechanism(&self, n_labels: usize) -> Result<MechanismParams> {
        MechanismParams::new(self.eta, n_labels)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: line_no,
                    reason: format!("expected key=value, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            if let Some((first, _)) = pairs.get(&key) {
                return Err(Error::Config {
                    line: line_no,
                    reason: format!("`{key}` already set on line {first}"),
                });
            }
            pairs.insert(key, (line_no, value.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn from_pairs(mut pairs: BTreeMap<String, (usize, String)>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut take = |key: &str| pairs.remove(key);

        if let Some(v) = take("dist.p") {
            cfg.p = finite(&v)?;
        }
        if let Some(v) = take("dist.k") {
            cfg.k = finite(&v)?;
        }
        match (take("dist.c"), take("dist.n")) {
            (Some(_), Some((line, _))) => {
                return Err(Error::Config {
                    line,
                    reason: "set dist.c or dist.n, not both".into(),
                })
            }
            (Some(v), None) => cfg.size = Size::Ratio(finite(&v)?),
            (None, Some(v)) => cfg.size = Size::Count(int(&v)?),
            (None, None) => {}
        }
        if let Some(v) = take("dist.m") {
            cfg.m = int(&v)?;
        }
        if let Some(v) = take("prior.labels") {
            cfg.n_labels = int(&v)?;
        }
        let shared = take("prior.table").map(|v| row(&v)).transpose()?;
        let majority = take("prior.table.majority").map(|v| row(&v)).transpose()?;
        let minority = take("prior.table.minority").map(|v| row(&v)).transpose()?;
        if let Some((line, preset)) = take("prior.preset") {
            cfg.prior = match preset.as_str() {
                "uniform" => PriorPreset::Uniform,
                "table" => {
                    let maj = majority.or_else(|| shared.clone());
                    let min = minority.or(shared);
                    match (maj, min) {
                        (Some(majority), Some(minority)) => {
                            PriorPreset::Table { majority, minority }
                        }
                        _ => {
                            return Err(Error::Config {
                                line,
                                reason: "table preset needs prior.table or both group rows".into(),
                            })
                        }
                    }
                }
                s => match s.strip_prefix("skewed:") {
                    Some(top) => PriorPreset::Skewed(finite(&(line, top.trim().to_string()))?),
                    None => {
                        return Err(Error::Config {
                            line,
                            reason: format!("unknown prior preset `{s}`"),
                        })
                    }
                },
            };
            if let PriorPreset::Table { majority, .. } = &cfg.prior {
                cfg.n_labels = majority.len();
            }
        }
        match (take("mech.eps"), take("mech.eta")) {
            (Some(_), Some((line, _))) => {
                return Err(Error::Config {
                    line,
                    reason: "set mech.eps or mech.eta, not both".into(),
                })
            }
            (Some(v), None) => cfg.level = Level::Epsilon(number(&v)?),
            (None, Some(v)) => cfg.level = Level::Eta(finite(&v)?),
            (None, None) => {}
        }
        if let Some(v) = take("mech.delta") {
            cfg.delta = finite(&v)?;
        }
        if let Some((line, v)) = take("mech.unseen") {
            cfg.unseen = match v.as_str() {
                "eager" => UnseenPolicy::Eager,
                "lazy" => UnseenPolicy::Lazy,
                _ => {
                    return Err(Error::Config {
                        line,
                        reason: format!("mech.unseen must be eager or lazy, got `{v}`"),
                    })
                }
            };
        }
        if let Some(v) = take("metrics.trials") {
            cfg.trials = int(&v)?;
        }
        if let Some(v) = take("metrics.seed") {
            cfg.seed = int(&v)?;
        }
        match (take("sweep.var"), take("sweep.grid")) {
            (Some((line, var)), Some(grid)) => {
                let var = var.parse::<SweepVar>().map_err(|e| Error::Config {
                    line,
                    reason: e.to_string(),
                })?;
                let grid = list(&grid, var == SweepVar::Eps)?;
                cfg.sweep = Some(Sweep { var, grid });
            }
            (None, None) => {}
            (Some((line, _)), None) | (None, Some((line, _))) => {
                return Err(Error::Config {
                    line,
                    reason: "sweep.var and sweep.grid go together".into(),
                })
            }
        }
        if let Some((_, v)) = take("output.path") {
            cfg.output = Some(PathBuf::from(v));
        }
        if let Some(v) = take("verify.alpha") {
            cfg.alpha = finite(&v)?;
        }
        if let Some(v) = take("verify.rare_max") {
            cfg.rare_max = int(&v)?;
        }
        if let Some(v) = take("report.accuracy_threshold") {
            cfg.accuracy_threshold = finite(&v)?;
        }
        if let Some(v) = take("synth.sigma") {
            cfg.sigma = finite(&v)?;
        }

        if let Some((key, (line, _))) = pairs.into_iter().next() {
            return Err(Error::Config {
                line,
                reason: format!("unknown key `{key}`"),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every grid point against the owning modules.
    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::ConfigValue(format!(
                "metrics.trials = {} < 2",
                self.trials
            )));
        }
        if !(0.0..=1.0).contains(&self.accuracy_threshold) {
            return Err(Error::ConfigValue(format!(
                "report.accuracy_threshold = {} not in [0, 1]",
                self.accuracy_threshold
            )));
        }
        if !(0.0..0.5).contains(&self.delta) {
            return Err(Error::ConfigValue(format!(
                "mech.delta = {} not in [0, 1/2)",
                self.delta
            )));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.grid.is_empty() {
                return Err(Error::ConfigValue("sweep.grid is empty".into()));
            }
            let up = sweep.grid.windows(2).all(|w| w[0] < w[1]);
            let down = sweep.grid.windows(2).all(|w| w[0] > w[1]);
            if !(up || down) {
                return Err(Error::ConfigValue(
                    "sweep.grid must be strictly monotone".into(),
                ));
            }
        }
        for i in 0..self.grid_len() {
            self.resolve(i).map_err(|e| match &self.sweep {
                Some(s) => Error::ConfigValue(format!(
                    "grid point {i} ({} = {}): {e}",
                    s.var.as_str(),
                    s.grid[i]
                )),
                None => Error::ConfigValue(e.to_string()),
            })?;
        }
        Ok(())
    }

    /// Number of grid points, 1 without a sweep.
    pub fn grid_len(&self) -> usize {
        self.sweep.as_ref().map_or(1, |s| s.grid.len())
    }

    /// Parameters at the base point, ignoring any sweep.
    pub fn base_point(&self) -> Result<Point> {
        self.point_with(None)
    }

    /// Parameters at grid point `index`.
    pub fn point(&self, index: usize) -> Result<Point> {
        match &self.sweep {
            Some(s) => {
                let value = *s
                    .grid
                    .get(index)
                    .ok_or_else(|| Error::param("index", format!("{index} >= {}", s.grid.len())))?;
                self.point_with(Some((s.var, value)))
            }
            None => self.base_point(),
        }
    }

    fn point_with(&self, swept: Option<(SweepVar, f64)>) -> Result<Point> {
        let (mut p, mut k, mut m, mut size, mut level) =
            (self.p, self.k, self.m, self.size, self.level);
        if let Some((var, v)) = swept {
            match var {
                SweepVar::Eps => level = Level::Epsilon(v),
                SweepVar::Eta => level = Level::Eta(v),
                SweepVar::C => size = Size::Ratio(v),
                SweepVar::M => m = as_count("m", v)?,
                SweepVar::P => p = v,
                SweepVar::K => k = v,
            }
        }
        if m == 0 {
            return Err(Error::param("m", "sample size must be positive"));
        }
        let n_minority = match size {
            Size::Count(n) => n,
            Size::Ratio(c) if c > 0.0 && c.is_finite() => (c * m as f64).ceil() as usize,
            Size::Ratio(c) => return Err(Error::param("c", format!("{c} must be > 0"))),
        };
        let (eta, epsilon) = match level {
            Level::Epsilon(e) if e == f64::INFINITY => (0.0, e),
            Level::Epsilon(e) => (eta_for_epsilon(e, self.n_labels)?, e),
            Level::Eta(0.0) => (0.0, f64::INFINITY),
            Level::Eta(eta) => (eta, privacy_of_eta(eta, self.n_labels)?),
        };
        let point = Point {
            p,
            k,
            n_minority,
            m,
            eta,
            epsilon,
        };
        point.spec()?;
        point.mechanism(self.n_labels)?;
        Ok(point)
    }

    fn resolve(&self, index: usize) -> Result<()> {
        let point = self.point(index)?;
        self.prior(&point.spec()?)?;
        Ok(())
    }

    pub fn prior(&self, spec: &DistributionSpec) -> Result<LabelPrior> {
        let domain = spec.domain_size();
        match &self.prior {
            PriorPreset::Uniform => LabelPrior::uniform(domain, self.n_labels),
            PriorPreset::Skewed(top) => LabelPrior::skewed(domain, self.n_labels, *top),
            PriorPreset::Table { majority, minority } => {
                if majority.len() != minority.len() {
                    return Err(Error::param("prior", "group rows differ in length"));
                }
                let rows: Vec<Vec<f64>> = std::iter::repeat_n(majority.clone(), spec.n_majority())
                    .chain(std::iter::repeat_n(minority.clone(), spec.n_minority()))
                    .collect();
                LabelPrior::from_rows(&rows)
            }
        }
    }

    pub fn learner(&self, point: &Point) -> Result<NoisyMajority> {
        Ok(NoisyMajority {
            params: point.mechanism(self.n_labels)?,
            policy: self.unseen,
        })
    }
}

type Entry = (usize, String);

fn bad(entry: &Entry, what: &str) -> Error {
    Error::Config {
        line: entry.0,
        reason: format!("`{}` is not {what}", entry.1),
    }
}

fn number(entry: &Entry) -> Result<f64> {
    let v: f64 = entry.1.parse().map_err(|_| bad(entry, "a number"))?;
    if v.is_nan() {
        return Err(bad(entry, "a number"));
    }
    Ok(v)
}

fn finite(entry: &Entry) -> Result<f64> {
    let v = number(entry)?;
    if !v.is_finite() {
        return Err(bad(entry, "a finite number"));
    }
    Ok(v)
}

fn int<T: FromStr>(entry: &Entry) -> Result<T> {
    entry
        .1
        .parse()
        .map_err(|_| bad(entry, "a non-negative integer"))
}

fn list(entry: &Entry, allow_inf: bool) -> Result<Vec<f64>> {
    entry
        .1
        .split(',')
        .map(|item| {
            let e = (entry.0, item.trim().to_string());
            if allow_inf {
                number(&e)
            } else {
                finite(&e)
            }
        })
        .collect()
}

fn row(entry: &Entry) -> Result<Vec<f64>> {
    list(entry, false)
}

fn as_count(name: &'static str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::param(name, format!("{v} is not a positive integer")))
    }
}
