//! Closed-form bound evaluators.
//!
//! Every evaluator returns raw values alongside a `[0, 1]`-clamped view.
//! Clamping never discards the raw number, so a vacuous bound (a negative
//! lower bound, an upper bound above one) stays distinguishable from a
//! violated one. Error bounds from the high-accuracy regime point up and
//! fairness bounds point down; the strict-privacy regime is the reverse, so
//! every value carries its [`Direction`].

use std::f64::consts::{LN_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::special::{normal_cdf, normal_pdf, normal_sf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upper,
    Lower,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
        })
    }
}

/// One bound value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub label: String,
    pub raw: f64,
    pub direction: Direction,
    /// Reason the formula's precondition fails, if it does.
    pub invalid: Option<String>,
}

impl Bound {
    fn new(label: &str, raw: f64, direction: Direction) -> Self {
        Self {
            label: label.to_string(),
            raw,
            direction,
            invalid: None,
        }
    }

    fn invalid_if(mut self, cond: bool, reason: impl Into<String>) -> Self {
        if cond && self.invalid.is_none() {
            self.invalid = Some(reason.into());
        }
        self
    }

    /// Raw value clamped to `[0, 1]`.
    pub fn value(&self) -> f64 {
        self.raw.clamp(0.0, 1.0)
    }

    pub fn is_valid(&self) -> bool {
        self.invalid.is_none()
    }

    /// True when the bound says nothing about a probability: a lower bound
    /// at or below zero, or an upper bound at or above one.
    pub fn is_vacuous(&self) -> bool {
        match self.direction {
            Direction::Lower => !(self.raw > 0.0),
            Direction::Upper => !(self.raw < 1.0),
        }
    }
}

/// A named group of bounds with the inputs that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub name: String,
    pub inputs: Vec<(String, f64)>,
    pub bounds: Vec<Bound>,
}

impl BoundSet {
    fn new(name: &str, inputs: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            bounds: Vec::new(),
        }
    }

    fn with(mut self, b: Bound) -> Self {
        self.bounds.push(b);
        self
    }

    /// Marks every bound invalid when `cond` holds.
    fn invalid_if(mut self, cond: bool, reason: &str) -> Self {
        if cond {
            for b in &mut self.bounds {
                if b.invalid.is_none() {
                    b.invalid = Some(reason.to_string());
                }
            }
        }
        self
    }

    pub fn get(&self, label: &str) -> Option<&Bound> {
        self.bounds.iter().find(|b| b.label == label)
    }

    /// Bound on the error, if this set has one.
    pub fn err(&self) -> Option<&Bound> {
        self.get("err")
    }

    /// Bound on the accuracy discrepancy, if this set has one.
    pub fn fair(&self) -> Option<&Bound> {
        self.get("fair")
    }

    pub fn is_valid(&self) -> bool {
        self.bounds.iter().all(Bound::is_valid)
    }
}

/// `(ε, δ)` privacy level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("{epsilon} must be > 0")));
        }
        if !(0.0..0.5).contains(&delta) {
            return Err(Error::param("delta", format!("{delta} not in [0, 1/2)")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Occurrence threshold `s0 = ⌊min(ln 2 / ε, ln(1 / 2δ))⌋`; `δ = 0` uses the
/// `ε` term alone.
pub fn s0(privacy: PrivacyParams) -> u64 {
    let eps_term = LN_2 / privacy.epsilon;
    let t = if privacy.delta > 0.0 {
        eps_term.min((1.0 / (2.0 * privacy.delta)).ln())
    } else {
        eps_term
    };
    t.floor().max(0.0) as u64
}

/// `(1 + s0 e^{-ε} δ) / (1 + e^{-s0 ε})`.
pub fn q_threshold(s0: u64, privacy: PrivacyParams) -> f64 {
    let (eps, delta) = (privacy.epsilon, privacy.delta);
    let s = s0 as f64;
    (1.0 + s * (-eps).exp() * delta) / (1.0 + (-s * eps).exp())
}

/// Misclassification floor `(1 - ‖F‖∞) / 3` for atoms seen fewer than `s0`
/// times.
pub fn lemma1_floor(sup_f: f64) -> f64 {
    (1.0 - sup_f) / 3.0
}

/// A value clamped to `[0, 1]` with the raw number kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamped {
    pub raw: f64,
    pub value: f64,
}

impl Clamped {
    pub fn new(raw: f64) -> Self {
        Self {
            raw,
            value: raw.clamp(0.0, 1.0),
        }
    }

    /// True when clamping changed the value.
    pub fn was_clamped(&self) -> bool {
        self.raw != self.value
    }
}

/// Per-atom error floor forced by privacy on a minority atom:
/// `1 - e^ε ‖F‖∞ - δ`.
pub fn c2_of(epsilon: f64, delta: f64, sup_f: f64) -> Clamped {
    Clamped::new(1.0 - epsilon.exp() * sup_f - delta)
}

/// Limits of error (upper) and accuracy discrepancy (lower) for an
/// algorithm with minority error at most `c1` and per-atom privacy floor
/// `c2`, at minority mass `p` and ratio `c = N / m`:
///
/// - `err ≤ c1 p (3p/(2c) + 1) e^{-p/(2c)}`
/// - `Γ ≥ c2 (1 - p) (p/(2c) + 1) e^{-3p/(2c)}`
pub fn thm1_bounds(p: f64, c: f64, c1: f64, c2: f64) -> BoundSet {
    let h = p / (2.0 * c);
    let err = c1 * p * (3.0 * h * (-h).exp() + (-h).exp());
    let fair = c2 * (1.0 - p) * (h * (-3.0 * h).exp() + (-3.0 * h).exp());
    BoundSet::new("thm1", &[("p", p), ("c", c), ("c1", c1), ("c2", c2)])
        .with(Bound::new("err", err, Direction::Upper))
        .with(Bound::new("fair", fair, Direction::Lower))
        .invalid_if(!(p > 0.0 && p < 0.5), "p not in (0, 1/2)")
        .invalid_if(!(c > 0.0), "c must be > 0")
        .invalid_if(!(0.0..=1.0).contains(&c1), "c1 not in [0, 1]")
        .invalid_if(!(0.0..=1.0).contains(&c2), "c2 not in [0, 1]")
}

/// Detailed high-accuracy regime bounds for an `(ε, δ)`-DP algorithm that
/// errs with probability at most `p1` on atoms seen more than `s0` times.
pub fn thm2_bounds(p: f64, c: f64, privacy: PrivacyParams, sup_f: f64, p1: f64) -> BoundSet {
    let s = s0(privacy) as f64;

    // Γ ≥ ((1-‖F‖)(1-p)/3)(1 - √(3p/(πc)) e^{-(c/3p)a²} / (2a)) - (1-p)p1,
    // a = s0 - 3p/(2c)
    let a = s - 3.0 * p / (2.0 * c);
    let dominant = (1.0 - sup_f) * (1.0 - p) / 3.0;
    let correction = (3.0 * p / (PI * c)).sqrt() * (-(c / (3.0 * p)) * a * a).exp() / (2.0 * a);
    let fair = Bound::new(
        "fair",
        dominant * (1.0 - correction) - (1.0 - p) * p1,
        Direction::Lower,
    )
    .invalid_if(!(a > 0.0), "s0 <= 3p/(2c)");

    // err ≤ (1-p1) p (1 - ((b²(2c/p) - 1) / (√(2π) b³ (2c/p)^{3/2})) e^{-b² c/p}) + p1,
    // b = s0 - p/(2c)
    let b = s - p / (2.0 * c);
    let scale = 2.0 * c / p;
    let tail = (b * b * scale - 1.0) / ((2.0 * PI).sqrt() * b.powi(3) * scale.powf(1.5))
        * (-(b * b) * c / p).exp();
    let err = Bound::new("err", (1.0 - p1) * p * (1.0 - tail) + p1, Direction::Upper)
        .invalid_if(!(b > 0.0), "s0 <= p/(2c)")
        .invalid_if(
            !(b * scale.sqrt() >= 1.0),
            "gaussian lower tail not positive",
        );

    BoundSet::new(
        "thm2",
        &[
            ("p", p),
            ("c", c),
            ("eps", privacy.epsilon),
            ("delta", privacy.delta),
            ("supF", sup_f),
            ("p1", p1),
            ("s0", s),
        ],
    )
    .with(err)
    .with(fair)
    .invalid_if(!(p > 0.0 && p < 0.5), "p not in (0, 1/2)")
    .invalid_if(!(c > 0.0 && p / c <= 1.0), "need c > 0 and p/c <= 1")
    .invalid_if(!(0.0..=1.0).contains(&p1), "p1 not in [0, 1]")
}

/// Privacy level of the strict-privacy regime:
/// `ε = ln 2 / (α √m + ((2 - 3p) / (2k(1 - p))) m)`.
pub fn thm3_epsilon(alpha: f64, m: f64, p: f64, k: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", format!("{alpha} must be > 0")));
    }
    if !(m >= 1.0) {
        return Err(Error::param("m", format!("{m} must be >= 1")));
    }
    let denom = alpha * m.sqrt() + thm3_linear_coefficient(p, k) * m;
    if !(denom > 0.0) {
        return Err(Error::param(
            "alpha",
            format!("nonpositive denominator {denom}"),
        ));
    }
    Ok(LN_2 / denom)
}

fn thm3_linear_coefficient(p: f64, k: f64) -> f64 {
    (2.0 - 3.0 * p) / (2.0 * k * (1.0 - p))
}

/// The `α` at which [`thm3_epsilon`] returns `epsilon`. Non-positive when
/// `epsilon` is too large for the strict-privacy regime.
pub fn thm3_alpha_for_epsilon(epsilon: f64, m: f64, p: f64, k: f64) -> f64 {
    (LN_2 / epsilon - thm3_linear_coefficient(p, k) * m) / m.sqrt()
}

/// Strict-privacy regime: error bounded below, accuracy discrepancy above.
///
/// - `err ≥ ((1 - ‖F‖)/3)(1 - (1 - p) e^{-c1 α²})`
/// - `Γ ≤ (1 - p)(1 - ((1 - ‖F‖)/3)(1 - e^{-c1 α²}))`
///
/// with `c1 = 4(2 - p)/(2 - 3p)²`.
pub fn thm3_bounds(p: f64, alpha: f64, sup_f: f64) -> BoundSet {
    let c1 = 4.0 * (2.0 - p) / ((2.0 - 3.0 * p) * (2.0 - 3.0 * p));
    let decay = (-c1 * alpha * alpha).exp();
    let floor = (1.0 - sup_f) / 3.0;
    BoundSet::new(
        "thm3",
        &[("p", p), ("alpha", alpha), ("supF", sup_f), ("c1", c1)],
    )
    .with(Bound::new(
        "err",
        floor * (1.0 - (1.0 - p) * decay),
        Direction::Lower,
    ))
    .with(Bound::new(
        "fair",
        (1.0 - p) * (1.0 - floor * (1.0 - decay)),
        Direction::Upper,
    ))
    .invalid_if(!(p > 0.0 && p < 0.5), "p not in (0, 1/2)")
    .invalid_if(!(alpha > 0.0), "alpha must be > 0")
    .invalid_if(!(sup_f > 0.0 && sup_f <= 1.0), "supF not in (0, 1]")
}

/// Which lower-tail formula [`lemma2_bounds`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma2Mode {
    /// Binomial anti-concentration at the integer cutoff `⌊l/2⌋`.
    #[default]
    Rigorous,
    /// `(1/√(2l)) (4η(1-η))^{l/2}`, which uses the non-integer cutoff `l/2`
    /// and can exceed the true error for odd `l`.
    Literal,
}

/// Chernoff upper tail `e^{-l(1-2η)²/(8(1-η))}` on the noisy-majority
/// misclassification probability of an atom seen `l` times.
pub fn lemma2_upper(copies: u64, eta: f64) -> f64 {
    let l = copies as f64;
    (-l * (1.0 - 2.0 * eta).powi(2) / (8.0 * (1.0 - eta))).exp()
}

/// Misclassification bounds for the noisy-majority learner on an atom seen
/// `copies` times.
pub fn lemma2_bounds(copies: u64, eta: f64, mode: Lemma2Mode) -> BoundSet {
    let l = copies as f64;
    let upper = Bound::new("upper", lemma2_upper(copies, eta), Direction::Upper);
    let lower = match mode {
        Lemma2Mode::Literal => Bound::new(
            "lower",
            (4.0 * eta * (1.0 - eta)).powf(l / 2.0) / (2.0 * l).sqrt(),
            Direction::Lower,
        ),
        Lemma2Mode::Rigorous => {
            let cutoff = (copies / 2) as f64;
            let d = kl_bernoulli(cutoff / l, 1.0 - eta).unwrap_or(f64::NAN);
            Bound::new("lower", (-l * d).exp() / (2.0 * l).sqrt(), Direction::Lower)
                .invalid_if(!(cutoff < l * (1.0 - eta)), "floor(l/2) >= l(1-eta)")
        }
    };
    let name = match mode {
        Lemma2Mode::Rigorous => "lemma2",
        Lemma2Mode::Literal => "lemma2_literal",
    };
    BoundSet::new(name, &[("l", l), ("eta", eta)])
        .with(upper)
        .with(lower)
        .invalid_if(copies == 0, "l must be >= 1")
        .invalid_if(!(eta > 0.0 && eta < 0.5), "eta not in (0, 1/2)")
}

/// Bernoulli KL divergence `D(a ‖ q)` with `0 ln 0 = 0`.
pub fn kl_bernoulli(a: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::param("a", format!("{a} not in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} not in [0, 1]")));
    }
    let term = |x: f64, y: f64| {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    };
    Ok(term(a, q) + term(1.0 - a, 1.0 - q))
}

/// Gaussian tail bracket
/// `(1/x - 1/x³) φ(x) ≤ P[W ≥ μ + σx] ≤ φ(x)/x` for `x > 0`.
/// The lower side is only positive for `x > 1`.
pub fn gaussian_tail_bounds(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::param("x", format!("{x} must be > 0")));
    }
    let phi = normal_pdf(x);
    Ok(((1.0 / x - 1.0 / (x * x * x)) * phi, phi / x))
}

/// `p1` witnessing the high-accuracy assumption for `A_η`: the majority-vote
/// upper tail at the first count above `s0`.
pub fn assumption_p1(s0: u64, eta: f64) -> f64 {
    lemma2_upper(s0 + 1, eta)
}
