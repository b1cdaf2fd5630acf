//! Analytic bounds checked against simulation.
//!
//! Asymptotic statements get a slack of three standard errors plus a
//! finite-size allowance `2/√m`. The exact sandwich has no slack.

use std::fmt;

use super::config::{ExperimentConfig, Point};
use super::sweep::point_metrics;
use crate::bounds::{
    assumption_p1, lemma1_floor, lemma2_bounds, s0, thm2_bounds, thm3_bounds, thm3_epsilon,
    Lemma2Mode, PrivacyParams,
};
use crate::mechanism::{eta_for_epsilon, tie_inclusive_failure};
use crate::special::derive_seed;
use crate::Result;

/// Largest count covered by the exact sandwich check.
pub const SANDWICH_MAX: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "NOT-APPLICABLE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub empirical: Option<f64>,
    pub bound: Option<f64>,
    pub slack: f64,
    pub detail: String,
}

impl Check {
    fn na(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: CheckStatus::NotApplicable,
            empirical: None,
            bound: None,
            slack: 0.0,
            detail: detail.into(),
        }
    }

    /// `empirical >= bound - slack`.
    fn at_least(
        name: &'static str,
        empirical: f64,
        bound: f64,
        slack: f64,
        detail: String,
    ) -> Self {
        Self {
            name,
            status: status(empirical >= bound - slack),
            empirical: Some(empirical),
            bound: Some(bound),
            slack,
            detail,
        }
    }

    /// `empirical <= bound + slack`.
    fn at_most(name: &'static str, empirical: f64, bound: f64, slack: f64, detail: String) -> Self {
        Self {
            name,
            status: status(empirical <= bound + slack),
            empirical: Some(empirical),
            bound: Some(bound),
            slack,
            detail,
        }
    }
}

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub point: Point,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    /// True when no check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        writeln!(
            f,
            "{:<16} {:<15} {:>10} {:>10} {:>10}  detail",
            "check", "status", "empirical", "bound", "slack"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<16} {:<15} {:>10} {:>10} {:>10.6}  {}",
                c.name,
                c.status.to_string(),
                opt(c.empirical),
                opt(c.bound),
                c.slack,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Finite-size allowance for asymptotic bounds.
pub fn allowance(m: usize) -> f64 {
    2.0 / (m as f64).sqrt()
}

/// Runs all checks at the config's base point (any sweep is ignored).
pub fn verify_bounds(config: &ExperimentConfig) -> Result<VerifyReport> {
    let point = config.base_point()?;
    let spec = point.spec()?;
    let sup_f = config.prior(&spec)?.sup_norm();
    let band = allowance(point.m);
    let mut checks = Vec::new();

    if point.eta == 0.0 {
        let why = "eta = 0 is not differentially private";
        checks.push(Check::na("thm2-fair", why));
        checks.push(Check::na("thm3-err", why));
        checks.push(Check::na("thm3-fair", why));
        checks.push(Check::na("lemma1-rare", why));
        checks.push(Check::na("lemma2-sandwich", why));
        return Ok(VerifyReport { point, checks });
    }

    let privacy = PrivacyParams::new(point.epsilon, config.delta)?;
    let s0 = s0(privacy);
    // The floor only covers counts below s0.
    let rare_max = config.rare_max.min(s0.saturating_sub(1) as u32);
    let mut main_cfg = config.clone();
    main_cfg.rare_max = rare_max.max(1);
    let report = point_metrics(&main_cfg, &point, config.seed)?;

    // (i) high-accuracy regime discrepancy floor
    let p1 = assumption_p1(s0, point.eta);
    let thm2 = thm2_bounds(point.p, point.c(), privacy, sup_f, p1);
    let fair = thm2.fair().expect("thm2 has a fair bound");
    checks.push(if let Some(why) = &fair.invalid {
        Check::na("thm2-fair", why.clone())
    } else if fair.is_vacuous() {
        Check::na(
            "thm2-fair",
            format!("bound {:.6} is vacuous (p1 = {p1:.4})", fair.raw),
        )
    } else {
        Check::at_least(
            "thm2-fair",
            report.gamma.mean,
            fair.raw,
            3.0 * report.gamma.stderr + band,
            format!("s0 = {s0}, p1 = {p1:.4}"),
        )
    });

    // (ii) strict-privacy regime at its own epsilon
    let eps3 = thm3_epsilon(config.alpha, point.m as f64, point.p, spec.k())?;
    match eta_for_epsilon(eps3, config.n_labels) {
        Err(e) => {
            checks.push(Check::na("thm3-err", e.to_string()));
            checks.push(Check::na("thm3-fair", e.to_string()));
        }
        Ok(eta3) => {
            let strict = Point {
                eta: eta3,
                epsilon: eps3,
                ..point
            };
            let r3 = point_metrics(config, &strict, derive_seed(config.seed, 1))?;
            let thm3 = thm3_bounds(point.p, config.alpha, sup_f);
            let detail = format!("eps = {eps3:.4e}, eta = {eta3:.6}");
            let err = thm3.err().expect("thm3 has an err bound");
            let fair = thm3.fair().expect("thm3 has a fair bound");
            checks.push(match &err.invalid {
                Some(why) => Check::na("thm3-err", why.clone()),
                None => Check::at_least(
                    "thm3-err",
                    r3.err_overall.mean,
                    err.raw,
                    3.0 * r3.err_overall.stderr + band,
                    detail.clone(),
                ),
            });
            checks.push(match &fair.invalid {
                Some(why) => Check::na("thm3-fair", why.clone()),
                None => Check::at_most(
                    "thm3-fair",
                    r3.gamma.mean,
                    fair.raw,
                    3.0 * r3.gamma.stderr + band,
                    detail,
                ),
            });
        }
    }

    // (iii) rare atoms
    checks.push(match (rare_max, report.rare_error) {
        (0, _) => Check::na("lemma1-rare", format!("s0 = {s0} leaves no rare counts")),
        (_, None) => Check::na("lemma1-rare", "no rare atoms were drawn"),
        (_, Some(est)) => {
            let per_l: Vec<String> = report.by_occurrence[1..=rare_max as usize]
                .iter()
                .map(|o| format!("l={}: {:.3}", o.l, o.rate))
                .collect();
            Check::at_least(
                "lemma1-rare",
                est.mean,
                lemma1_floor(sup_f),
                3.0 * est.stderr + band,
                format!("l <= {rare_max}; {}", per_l.join(", ")),
            )
        }
    });

    // (iv) exact sandwich
    checks.push(sandwich_check(point.eta));

    Ok(VerifyReport { point, checks })
}

/// Lower bound ≤ exact tie-inclusive failure ≤ upper tail, for
/// `l = 1..=SANDWICH_MAX`, with no tolerance.
pub fn sandwich_check(eta: f64) -> Check {
    if !(eta > 0.0 && eta < 0.5) {
        return Check::na("lemma2-sandwich", format!("eta = {eta} not in (0, 1/2)"));
    }
    let mut worst: Option<String> = None;
    for l in 1..=SANDWICH_MAX {
        let set = lemma2_bounds(l, eta, Lemma2Mode::Rigorous);
        let exact = tie_inclusive_failure(l, eta);
        let upper = set.get("upper").expect("upper").raw;
        let lower = set.get("lower").expect("lower");
        let low_ok = !lower.is_valid() || lower.raw <= exact;
        if !(low_ok && exact <= upper) && worst.is_none() {
            worst = Some(format!("l = {l}: {} <= {exact} <= {upper}", lower.raw));
        }
    }
    Check {
        name: "lemma2-sandwich",
        status: status(worst.is_none()),
        empirical: None,
        bound: None,
        slack: 0.0,
        detail: worst.unwrap_or_else(|| format!("l = 1..={SANDWICH_MAX}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_private_marks_checks_not_applicable() {
        let cfg = ExperimentConfig::parse("mech.eps=inf\ndist.m=200\nmetrics.trials=2").unwrap();
        let report = verify_bounds(&cfg).unwrap();
        assert!(report.passed());
        for name in ["thm2-fair", "thm3-err", "thm3-fair"] {
            assert_eq!(report.get(name).unwrap().status, CheckStatus::NotApplicable);
        }
    }

    #[test]
    fn sandwich_holds_on_grid() {
        for eta in [0.1, 0.3, 0.475] {
            assert_eq!(sandwich_check(eta).status, CheckStatus::Pass);
        }
        assert_eq!(sandwich_check(0.0).status, CheckStatus::NotApplicable);
    }

    #[test]
    fn report_renders_every_check() {
        let cfg = ExperimentConfig::parse(
            "mech.eps=0.1\ndist.k=10\ndist.c=1\ndist.m=500\nmetrics.trials=4",
        )
        .unwrap();
        let report = verify_bounds(&cfg).unwrap();
        let text = report.to_string();
        assert_eq!(text.lines().count(), 1 + report.checks.len());
        assert_eq!(report.checks.len(), 5);
    }
}
