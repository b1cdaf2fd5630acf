use std::io::{BufRead, BufReader, Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Point};
use crate::bounds::{
    assumption_p1, s0, thm2_bounds, thm3_alpha_for_epsilon, thm3_bounds, PrivacyParams,
};
use crate::metrics::{mc_metrics_with, McOptions, MetricsReport};
use crate::special::derive_seed;
use crate::{Error, Result};

/// First line of every sweep CSV.
pub const SCHEMA_LINE: &str = "# schema=1";

/// One grid point of a sweep. Bound columns are always filled; the
/// `*_valid` flags say whether the formula's preconditions hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub eps: f64,
    pub eta: f64,
    pub c: f64,
    pub n_minority: usize,
    pub m: usize,
    pub err_overall: f64,
    pub err_overall_se: f64,
    pub err_minority: f64,
    pub err_minority_se: f64,
    pub err_majority: f64,
    pub err_majority_se: f64,
    pub gamma: f64,
    pub gamma_se: f64,
    pub accuracy: f64,
    pub high_accuracy: bool,
    pub thm2_err: f64,
    pub thm2_err_valid: bool,
    pub thm2_fair: f64,
    pub thm2_fair_valid: bool,
    pub thm3_alpha: f64,
    pub thm3_err: f64,
    pub thm3_fair: f64,
    pub thm3_valid: bool,
    /// Not covered by the determinism guarantee.
    pub wall_ms: f64,
}

/// Runs every grid point (concurrently) and returns rows in grid order.
/// Point `i` uses master seed `derive_seed(config.seed, i)`, so two configs
/// differing only in a fixed parameter share their random streams.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    (0..config.grid_len())
        .into_par_iter()
        .map(|i| {
            run_point(config, i).map_err(|e| match &config.sweep {
                Some(s) => Error::GridPoint {
                    index: i,
                    variable: s.var.as_str().to_string(),
                    value: s.grid[i],
                    source: Box::new(e),
                },
                None => e,
            })
        })
        .collect()
}

fn run_point(config: &ExperimentConfig, index: usize) -> Result<SweepRow> {
    let start = Instant::now();
    let point = config.point(index)?;
    let report = point_metrics(config, &point, derive_seed(config.seed, index as u64))?;
    let value = config
        .sweep
        .as_ref()
        .map_or(point.epsilon, |s| s.grid[index]);
    let mut row = row_from(config, &point, value, &report)?;
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(row)
}

/// Monte-Carlo metrics of `A_η` at one resolved point.
pub fn point_metrics(config: &ExperimentConfig, point: &Point, seed: u64) -> Result<MetricsReport> {
    let spec = point.spec()?;
    let prior = config.prior(&spec)?;
    let learner = config.learner(point)?;
    let opts = McOptions {
        rare_max: config.rare_max,
        ..McOptions::new(config.trials, seed)
    };
    mc_metrics_with(&learner, &spec, &prior, point.m, &opts)
}

fn row_from(
    config: &ExperimentConfig,
    point: &Point,
    value: f64,
    report: &MetricsReport,
) -> Result<SweepRow> {
    let spec = point.spec()?;
    let sup_f = config.prior(&spec)?.sup_norm();
    let privacy = PrivacyParams::new(point.epsilon, config.delta)?;
    let p1 = assumption_p1(s0(privacy), point.eta);
    let thm2 = thm2_bounds(point.p, point.c(), privacy, sup_f, p1);
    let alpha = thm3_alpha_for_epsilon(point.epsilon, point.m as f64, point.p, spec.k());
    let thm3 = thm3_bounds(point.p, alpha, sup_f);
    let get = |set: &crate::bounds::BoundSet, label: &str| {
        set.get(label)
            .cloned()
            .expect("bound sets carry err and fair")
    };
    let (t2e, t2f) = (get(&thm2, "err"), get(&thm2, "fair"));
    let (t3e, t3f) = (get(&thm3, "err"), get(&thm3, "fair"));

    let err_overall = report.err_overall.mean;
    Ok(SweepRow {
        value,
        eps: point.epsilon,
        eta: point.eta,
        c: point.c(),
        n_minority: point.n_minority,
        m: point.m,
        err_overall,
        err_overall_se: report.err_overall.stderr,
        err_minority: report.err_minority.mean,
        err_minority_se: report.err_minority.stderr,
        err_majority: report.err_majority.mean,
        err_majority_se: report.err_majority.stderr,
        gamma: report.gamma.mean,
        gamma_se: report.gamma.stderr,
        accuracy: 1.0 - err_overall,
        high_accuracy: 1.0 - err_overall >= config.accuracy_threshold,
        thm2_err: t2e.raw,
        thm2_err_valid: t2e.is_valid(),
        thm2_fair: t2f.raw,
        thm2_fair_valid: t2f.is_valid(),
        thm3_alpha: alpha,
        thm3_err: t3e.raw,
        thm3_fair: t3f.raw,
        thm3_valid: thm3.is_valid(),
        wall_ms: 0.0,
    })
}

/// Rows in the high-accuracy phase, where overall accuracy reaches the
/// configured threshold.
pub fn high_accuracy_rows(rows: &[SweepRow]) -> Vec<&SweepRow> {
    rows.iter().filter(|r| r.high_accuracy).collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record(column_names())?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(Error::Csv(format!(
            "expected `{SCHEMA_LINE}`, found `{}`",
            first.trim_end()
        )));
    }
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn column_names() -> Vec<&'static str> {
    vec![
        "value",
        "eps",
        "eta",
        "c",
        "n_minority",
        "m",
        "err_overall",
        "err_overall_se",
        "err_minority",
        "err_minority_se",
        "err_majority",
        "err_majority_se",
        "gamma",
        "gamma_se",
        "accuracy",
        "high_accuracy",
        "thm2_err",
        "thm2_err_valid",
        "thm2_fair",
        "thm2_fair_valid",
        "thm3_alpha",
        "thm3_err",
        "thm3_fair",
        "thm3_valid",
        "wall_ms",
    ]
}
