//! Named bound evaluators for the command line.

use std::fmt;

use crate::bounds::{
    assumption_p1, c2_of, gaussian_tail_bounds, kl_bernoulli, lemma1_floor, lemma2_bounds,
    normal_cdf, normal_pdf, normal_sf, q_threshold, s0, thm1_bounds, thm2_bounds, thm3_bounds,
    thm3_epsilon, BoundSet, Direction, Lemma2Mode, PrivacyParams,
};
use crate::mechanism::{eta_for_epsilon, exact_point_error, privacy_of_eta};
use crate::{Error, Result};

/// Names accepted by [`eval_bounds_command`].
pub const EVALUATORS: &[&str] = &[
    "s0",
    "q",
    "lemma1",
    "c2",
    "thm1",
    "thm2",
    "thm3eps",
    "thm3",
    "lemma2",
    "kl",
    "normal_cdf",
    "gaussian_tails",
    "privacy",
    "eta",
    "exact_error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub raw: f64,
    /// Clamped to `[0, 1]` for probability bounds, else equal to `raw`.
    pub value: f64,
    pub direction: Option<Direction>,
    pub invalid: Option<String>,
}

impl TableRow {
    fn scalar(label: &str, raw: f64) -> Self {
        Self {
            label: label.to_string(),
            raw,
            value: raw,
            direction: None,
            invalid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTable {
    pub name: String,
    pub rows: Vec<TableRow>,
}

impl BoundTable {
    pub fn get(&self, label: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    fn push_set(&mut self, set: &BoundSet, prefix: &str) {
        for b in &set.bounds {
            self.rows.push(TableRow {
                label: format!("{prefix}{}", b.label),
                raw: b.raw,
                value: b.value(),
                direction: Some(b.direction),
                invalid: b.invalid.clone(),
            });
        }
    }
}

impl fmt::Display for BoundTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.name)?;
        writeln!(
            f,
            "{:<16} {:>14} {:>14} {:>9}  valid",
            "label", "raw", "value", "direction"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16} {:>14} {:>14} {:>9}  {}",
                r.label,
                num(r.raw),
                num(r.value),
                r.direction.map_or("-".to_string(), |d| d.to_string()),
                r.invalid
                    .as_deref()
                    .map_or("yes".to_string(), |w| format!("no ({w})"))
            )?;
        }
        Ok(())
    }
}

fn num(v: f64) -> String {
    if v != 0.0 && v.is_finite() && !(1e-4..1e6).contains(&v.abs()) {
        format!("{v:.6e}")
    } else {
        format!("{v:.8}")
    }
}

/// Parses `name=value` words.
pub fn parse_assignments<S: AsRef<str>>(words: &[S]) -> Result<Vec<(String, f64)>> {
    words
        .iter()
        .map(|w| {
            let w = w.as_ref();
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::ConfigValue(format!("expected name=value, got `{w}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::ConfigValue(format!("`{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

struct Params<'a> {
    evaluator: &'a str,
    given: &'a [(String, f64)],
    used: Vec<&'static str>,
}

impl Params<'_> {
    fn canonical(name: &str) -> &str {
        match name {
            "epsilon" => "eps",
            "sup_f" | "supf" | "supF" => "supF",
            "copies" => "l",
            other => other,
        }
    }

    fn opt(&mut self, name: &'static str) -> Option<f64> {
        self.used.push(name);
        self.given
            .iter()
            .find(|(k, _)| Self::canonical(k) == name)
            .map(|(_, v)| *v)
    }

    fn req(&mut self, name: &'static str) -> Result<f64> {
        self.opt(name).ok_or_else(|| {
            Error::ConfigValue(format!("{} needs parameter `{name}`", self.evaluator))
        })
    }

    fn count(&mut self, name: &'static str) -> Result<u64> {
        let v = self.req(name)?;
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as u64)
        } else {
            Err(Error::ConfigValue(format!(
                "`{name}` must be a non-negative integer"
            )))
        }
    }

    fn labels(&mut self) -> Result<usize> {
        match self.opt("labels") {
            None => Ok(2),
            Some(v) if v >= 2.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(v) => Err(Error::ConfigValue(format!(
                "labels = {v} must be an integer >= 2"
            ))),
        }
    }

    fn finish(self) -> Result<()> {
        for (k, _) in self.given {
            if !self.used.contains(&Self::canonical(k)) {
                return Err(Error::ConfigValue(format!(
                    "{} does not take parameter `{k}`",
                    self.evaluator
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates one named bound on `name=value` parameters.
pub fn eval_bounds_command(name: &str, params: &[(String, f64)]) -> Result<BoundTable> {
    let mut ps = Params {
        evaluator: name,
        given: params,
        used: Vec::new(),
    };
    let mut table = BoundTable {
        name: name.to_string(),
        rows: Vec::new(),
    };
    fn privacy(ps: &mut Params) -> Result<PrivacyParams> {
        PrivacyParams::new(ps.req("eps")?, ps.opt("delta").unwrap_or(0.0))
    }
    match name {
        "s0" => {
            let pr = privacy(&mut ps)?;
            table.rows.push(TableRow::scalar("s0", s0(pr) as f64));
        }
        "q" => {
            let pr = privacy(&mut ps)?;
            let s = match ps.opt("s0") {
                Some(v) => v as u64,
                None => s0(pr),
            };
            table.rows.push(TableRow::scalar("s0", s as f64));
            table.rows.push(TableRow::scalar("q", q_threshold(s, pr)));
        }
        "lemma1" => {
            let f = ps.req("supF")?;
            table.rows.push(TableRow::scalar("floor", lemma1_floor(f)));
        }
        "c2" => {
            let c = c2_of(
                ps.req("eps")?,
                ps.opt("delta").unwrap_or(0.0),
                ps.req("supF")?,
            );
            table.rows.push(TableRow {
                value: c.value,
                ..TableRow::scalar("c2", c.raw)
            });
        }
        "thm1" => {
            let set = thm1_bounds(ps.req("p")?, ps.req("c")?, ps.req("c1")?, ps.req("c2")?);
            table.push_set(&set, "");
        }
        "thm2" => {
            let (p, c) = (ps.req("p")?, ps.req("c")?);
            let pr = privacy(&mut ps)?;
            let sup_f = ps.req("supF")?;
            let labels = ps.labels()?;
            let p1 = match ps.opt("p1") {
                Some(v) => v,
                None => assumption_p1(s0(pr), eta_for_epsilon(pr.epsilon(), labels)?),
            };
            table.rows.push(TableRow::scalar("s0", s0(pr) as f64));
            table.rows.push(TableRow::scalar("p1", p1));
            table.push_set(&thm2_bounds(p, c, pr, sup_f, p1), "");
        }
        "thm3eps" => {
            let eps = thm3_epsilon(ps.req("alpha")?, ps.req("m")?, ps.req("p")?, ps.req("k")?)?;
            table.rows.push(TableRow::scalar("eps", eps));
            table
                .rows
                .push(TableRow::scalar("eta", eta_for_epsilon(eps, 2)?));
        }
        "thm3" => {
            let set = thm3_bounds(ps.req("p")?, ps.req("alpha")?, ps.req("supF")?);
            table.rows.push(TableRow::scalar("c1", set.inputs[3].1));
            table.push_set(&set, "");
        }
        "lemma2" => {
            let (l, eta) = (ps.count("l")?, ps.req("eta")?);
            table.push_set(&lemma2_bounds(l, eta, Lemma2Mode::Rigorous), "");
            let literal = lemma2_bounds(l, eta, Lemma2Mode::Literal);
            if let Some(b) = literal.get("lower") {
                table.push_set(
                    &BoundSet {
                        bounds: vec![b.clone()],
                        ..literal.clone()
                    },
                    "literal_",
                );
            }
        }
        "kl" => {
            table.rows.push(TableRow::scalar(
                "kl",
                kl_bernoulli(ps.req("a")?, ps.req("q")?)?,
            ));
        }
        "normal_cdf" => {
            let x = ps.req("x")?;
            table.rows.push(TableRow::scalar("cdf", normal_cdf(x)));
            table.rows.push(TableRow::scalar("sf", normal_sf(x)));
            table.rows.push(TableRow::scalar("pdf", normal_pdf(x)));
        }
        "gaussian_tails" => {
            let (lo, hi) = gaussian_tail_bounds(ps.req("x")?)?;
            table.rows.push(TableRow::scalar("lower", lo));
            table.rows.push(TableRow::scalar("upper", hi));
        }
        "privacy" => {
            let eta = ps.req("eta")?;
            let labels = ps.labels()?;
            table
                .rows
                .push(TableRow::scalar("eps", privacy_of_eta(eta, labels)?));
        }
        "eta" => {
            let eps = ps.req("eps")?;
            let labels = ps.labels()?;
            table
                .rows
                .push(TableRow::scalar("eta", eta_for_epsilon(eps, labels)?));
        }
        "exact_error" => {
            let (l, eta) = (ps.count("l")?, ps.req("eta")?);
            let labels = ps.labels()?;
            table.rows.push(TableRow::scalar(
                "error",
                exact_point_error(l, eta, labels)?,
            ));
        }
        other => {
            return Err(Error::ConfigValue(format!(
                "unknown evaluator `{other}`; expected one of {}",
                EVALUATORS.join(", ")
            )))
        }
    }
    ps.finish()?;
    Ok(table)
}
