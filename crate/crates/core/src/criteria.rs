//! Certificate-producing checkers for the compactness, first-zero and
//! oscillation criteria.
//!
//! Every checker is a sufficient condition. `Satisfied` requires the strict
//! inequality to hold with margin `10 tol (1 + |rhs|)`; `Violated` is only
//! emitted when the condition provably fails for every admissible parameter.
//! Limits and divergence at infinity are decided from declared tail classes,
//! never from finite samples.

use crate::error::{Error, Result};
use crate::expr::{Asymptote, Term};
use crate::profiles::{
    geometric_grid, integrate, tail_integral, v_inv_integral, weighted_moment, CoefficientPair,
    CurvatureProfile, Divergence, L1Status, Profile, TailClass,
};
use crate::report::json_number;
use crate::scalar::{b_coth, two_b_v_over_v_minus_one, Real};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CriterionId {
    MyersGalloway,
    AmbroseMoore,
    Nehari,
    Calabi,
    MainB2,
    FirstZero,
    Oscillation,
    MooreLiminf,
    Leighton,
    Bmr,
    DiameterRemark,
    Lambda1Negative,
    InstabilityAtInfinity,
    Yamabe,
}

impl CriterionId {
    pub const ALL: [CriterionId; 14] = [
        CriterionId::MyersGalloway,
        CriterionId::AmbroseMoore,
        CriterionId::Nehari,
        CriterionId::Calabi,
        CriterionId::MainB2,
        CriterionId::FirstZero,
        CriterionId::Oscillation,
        CriterionId::MooreLiminf,
        CriterionId::Leighton,
        CriterionId::Bmr,
        CriterionId::DiameterRemark,
        CriterionId::Lambda1Negative,
        CriterionId::InstabilityAtInfinity,
        CriterionId::Yamabe,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionId::MyersGalloway => "myers_galloway",
            CriterionId::AmbroseMoore => "ambrose_moore",
            CriterionId::Nehari => "nehari",
            CriterionId::Calabi => "calabi",
            CriterionId::MainB2 => "main_B2",
            CriterionId::FirstZero => "first_zero",
            CriterionId::Oscillation => "oscillation",
            CriterionId::MooreLiminf => "moore_liminf",
            CriterionId::Leighton => "leighton",
            CriterionId::Bmr => "bmr",
            CriterionId::DiameterRemark => "diameter_remark",
            CriterionId::Lambda1Negative => "lambda1_negative",
            CriterionId::InstabilityAtInfinity => "instability_at_infinity",
            CriterionId::Yamabe => "yamabe",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Satisfied => "SATISFIED",
            Status::Violated => "VIOLATED",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Conclusion {
    ManifoldCompact,
    FirstZeroExists,
    Oscillatory,
    DiameterBound(f64),
    NegativeBottomSpectrum,
    UnstableAtInfinity,
    ConformalDeformation,
}

impl Conclusion {
    fn to_json(self) -> Value {
        match self {
            Conclusion::DiameterBound(d) => {
                let mut m = Map::new();
                m.insert("DiameterBound".into(), json_number(d));
                Value::Object(m)
            }
            other => Value::String(format!("{other:?}")),
        }
    }
}

/// Outcome of one criterion check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub criterion: CriterionId,
    pub status: Status,
    /// Conclusions licensed when the status is `Satisfied`; empty otherwise.
    pub conclusion: Vec<Conclusion>,
    pub witness: BTreeMap<String, f64>,
    pub notes: String,
}

impl Verdict {
    pub fn new(criterion: CriterionId) -> Self {
        Verdict {
            criterion,
            status: Status::Inconclusive,
            conclusion: Vec::new(),
            witness: BTreeMap::new(),
            notes: String::new(),
        }
    }

    pub fn with<T: Real>(mut self, key: &str, value: T) -> Self {
        self.witness.insert(key.to_string(), value.as_f64());
        self
    }

    pub fn set<T: Real>(&mut self, key: &str, value: T) {
        self.witness.insert(key.to_string(), value.as_f64());
    }

    pub fn note(&mut self, text: impl AsRef<str>) {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(text.as_ref());
    }

    /// Sets `Satisfied` with the given conclusions.
    pub fn satisfy(&mut self, conclusions: &[Conclusion]) {
        self.status = Status::Satisfied;
        self.conclusion = conclusions.to_vec();
    }

    pub fn is_satisfied(&self) -> bool {
        self.status == Status::Satisfied
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.witness.get(key).copied()
    }

    /// Relabels a delegated verdict.
    pub fn relabel(mut self, criterion: CriterionId, conclusions: &[Conclusion]) -> Self {
        self.criterion = criterion;
        if self.is_satisfied() {
            self.conclusion = conclusions.to_vec();
        }
        self
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("criterion".into(), Value::String(self.criterion.as_str().into()));
        m.insert("status".into(), Value::String(self.status.as_str().into()));
        m.insert("conclusion".into(), Value::Array(self.conclusion.iter().map(|c| c.to_json()).collect()));
        let w: Map<String, Value> = self.witness.iter().map(|(k, &v)| (k.clone(), json_number(v))).collect();
        m.insert("witness".into(), Value::Object(w));
        m.insert("notes".into(), Value::String(self.notes.clone()));
        Value::Object(m)
    }
}

/// `lhs > rhs` with margin `10 tol (1 + |rhs|)`.
pub fn exceeds<T: Real>(lhs: T, rhs: T, tol: T) -> bool {
    lhs - rhs > T::lit(10.0) * tol * (T::one() + rhs.abs())
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParams(msg()))
    }
}

/// Whether `K` is a constant `<= 0`, which defeats every integral condition.
fn certified_nonpositive<T: Real>(k: &CurvatureProfile<T>) -> bool {
    k.k.is_constant().is_some_and(|c| c <= T::zero())
}

/// Diameter bound `(1/c) [2F + sqrt(4F^2 + pi^2 (m-1) c)]`.
pub fn check_myers_galloway<T: Real>(c: T, f_bound: T, m: u32) -> Result<Verdict> {
    require(c > T::zero(), || format!("c must be positive, got {c}"))?;
    require(f_bound >= T::zero(), || format!("F must be non-negative, got {f_bound}"))?;
    require(m >= 2, || format!("dimension must be at least 2, got {m}"))?;
    let two = T::lit(2.0);
    let mm1 = T::lit((m - 1) as f64);
    let bound = (two * f_bound + (T::lit(4.0) * f_bound * f_bound + T::PI() * T::PI() * mm1 * c).sqrt()) / c;
    let mut v = Verdict::new(CriterionId::MyersGalloway).with("c", c).with("F", f_bound).with("m", mm1 + T::one());
    v.set("diameter_bound", bound);
    v.satisfy(&[Conclusion::DiameterBound(bound.as_f64()), Conclusion::ManifoldCompact]);
    Ok(v)
}

/// Lower limit for integrals "from 0" of a profile that may be singular there.
fn lower_limit<T: Real>(p: &Profile<T>, fallback: T) -> T {
    if p.l1_at_zero() == L1Status::Integrable {
        T::zero()
    } else {
        fallback
    }
}

/// `int_0^inf t^lambda K = +inf`, decided from the tail class of `t^lambda K`.
pub fn check_ambrose_moore<T: Real>(k: &CurvatureProfile<T>, lambda: T, horizon: T, tol: T) -> Result<Verdict> {
    require(lambda >= T::zero() && lambda < T::one(), || format!("lambda must lie in [0, 1), got {lambda}"))?;
    require(horizon > T::zero(), || format!("horizon must be positive, got {horizon}"))?;
    let weighted = Profile::power(T::one(), lambda).product(&k.k);
    let mut v = Verdict::new(CriterionId::AmbroseMoore).with("lambda", lambda).with("horizon", horizon);
    let lo = lower_limit(&weighted, horizon.min(T::one()) * T::lit(0.5));
    if lo > T::zero() {
        v.note(format!("partial integral taken from t = {lo}: integrand not integrable at 0"));
    }
    v.set("partial_integral", integrate(&weighted, lo, horizon, tol)?.value);
    match weighted.divergence() {
        Divergence::PlusInfinity => {
            v.set("limit", T::infinity());
            v.satisfy(&[Conclusion::ManifoldCompact]);
        }
        Divergence::Finite => v.note("tail class gives a convergent integral"),
        Divergence::MinusInfinity => v.note("tail class gives divergence to -inf"),
        Divergence::Unknown => v.note("no tail information; finite-horizon evidence only"),
    }
    if let Asymptote::Term(t) = k.k.tail_class().leading() {
        if t.c < T::zero() {
            v.status = Status::Violated;
            v.note("K is eventually negative: the integral cannot diverge to +inf for any lambda");
        }
    }
    Ok(v)
}

/// `int_{t0}^inf t^lambda K > (2-lambda)^2 / (4 (1-lambda)) t0^{lambda-1}`, for `K >= 0`.
pub fn check_nehari<T: Real>(k: &CurvatureProfile<T>, lambda: T, t0: T, horizon: T, tol: T) -> Result<Verdict> {
    require(lambda >= T::zero() && lambda < T::one(), || format!("lambda must lie in [0, 1), got {lambda}"))?;
    require(t0 > T::zero() && horizon > t0, || format!("need 0 < t0 < horizon, got t0 = {t0}, horizon = {horizon}"))?;
    k.check_nonnegative()?;
    let one = T::one();
    let threshold = (T::lit(2.0) - lambda).powi(2) / (T::lit(4.0) * (one - lambda)) * t0.powf(lambda - one);
    let weighted = Profile::power(one, lambda).product(&k.k);
    let partial = integrate(&weighted, t0, horizon, tol)?.value;
    let mut v = Verdict::new(CriterionId::Nehari)
        .with("lambda", lambda)
        .with("t0", t0)
        .with("horizon", horizon)
        .with("rhs", threshold)
        .with("partial_integral", partial);
    // K >= 0 makes the truncated integral a certified lower bound; a declared
    // tail upgrades it to the full integral.
    let lhs = match tail_integral(&weighted, horizon, tol) {
        Ok(tail) => {
            v.set("tail_integral", tail);
            partial + tail
        }
        Err(Error::TailInfoMissing(_)) => {
            v.note("no tail information; using the truncated integral");
            partial
        }
        Err(e) => return Err(e),
    };
    v.set("lhs", lhs);
    if exceeds(lhs, threshold, tol) {
        v.satisfy(&[Conclusion::ManifoldCompact]);
    }
    Ok(v)
}

/// `limsup { int_0^a sqrt K - log(a) / (2 sqrt(m-1)) } = +inf`, for `K >= 0`.
pub fn check_calabi<T: Real>(k: &CurvatureProfile<T>, horizon: T, tol: T) -> Result<Verdict> {
    require(horizon > T::one(), || format!("horizon must exceed 1, got {horizon}"))?;
    k.check_nonnegative()?;
    let sqrt_k = k.k.sqrt();
    let coef = T::one() / (T::lit(2.0) * T::lit((k.m - 1) as f64).sqrt());
    let mut v = Verdict::new(CriterionId::Calabi).with("horizon", horizon).with("log_coefficient", coef);
    let eps = T::lit(1e-6);
    let lo = lower_limit(&sqrt_k, eps);
    if lo > T::zero() {
        v.note(format!("sqrt K is not integrable at 0; integrals start at {lo}"));
    }
    let grid = geometric_grid(T::one(), horizon, 64);
    let mut cumulative = integrate(&sqrt_k, lo, grid[0], tol)?.value;
    let mut best = (cumulative - coef * grid[0].ln(), grid[0]);
    for w in grid.windows(2) {
        cumulative = cumulative + integrate(&sqrt_k, w[0], w[1], tol)?.value;
        let g = cumulative - coef * w[1].ln();
        if g > best.0 {
            best = (g, w[1]);
        }
    }
    v.set("max_g", best.0);
    v.set("argmax_a", best.1);
    match sqrt_k.tail_class().leading() {
        Asymptote::Term(t) if t.c > T::zero() && (t.rate > T::zero() || (t.rate == T::zero() && t.p > -T::one())) => {
            v.set("limit", T::infinity());
            v.satisfy(&[Conclusion::ManifoldCompact]);
        }
        Asymptote::Term(t) if t.rate == T::zero() && t.p == -T::one() => {
            v.set("sqrt_k_log_coefficient", t.c);
            if exceeds(t.c, coef, tol) {
                v.set("limit", T::infinity());
                v.satisfy(&[Conclusion::ManifoldCompact]);
            } else {
                v.note("logarithmic growth of int sqrt K does not beat the threshold coefficient");
            }
        }
        Asymptote::Unknown => v.note("no tail information; finite-horizon evidence only"),
        _ => v.note("int sqrt K converges or grows too slowly"),
    }
    Ok(v)
}

/// Right side of the integral condition on `int_a^b t^lambda K`; the `B = 0`
/// limit and the `lambda = 1` form are both handled by continuity of `B coth(Ba)`.
pub fn main_b2_rhs<T: Real>(b_const: T, a: T, b: T, lambda: T) -> T {
    let one = T::one();
    let quarter = T::lit(0.25);
    if lambda == one {
        b_const * b + a * b_coth(b_const, a) + quarter * (b / a).ln()
    } else {
        b_const * b.powf(lambda)
            + a.powf(lambda) * b_coth(b_const, a)
            + lambda * lambda / (T::lit(4.0) * (one - lambda)) * (a.powf(lambda - one) - b.powf(lambda - one))
    }
}

/// Integral condition at one `(a, b, lambda)` under `K >= -B^2`.
pub fn check_main_b2<T: Real>(k: &CurvatureProfile<T>, a: T, b: T, lambda: T, tol: T) -> Result<Verdict> {
    require(a > T::zero() && a < b, || format!("need 0 < a < b, got a = {a}, b = {b}"))?;
    let bc = k.b_const;
    let lhs = weighted_moment(k, lambda, a, b, tol)?;
    let rhs = main_b2_rhs(bc, a, b, lambda);
    let mut v = Verdict::new(CriterionId::MainB2)
        .with("a", a)
        .with("b", b)
        .with("lambda", lambda)
        .with("B", bc)
        .with("lhs", lhs)
        .with("rhs", rhs)
        .with("margin", lhs - rhs);
    let fires = if lambda == T::zero() && bc > T::zero() {
        // (1 - e^{-2Ba}) int_a^b K > 2B, the same inequality rescaled.
        let scaled = -(-(T::lit(2.0) * bc * a)).exp_m1() * lhs;
        v.set("compact_lhs", scaled);
        v.set("compact_rhs", T::lit(2.0) * bc);
        exceeds(scaled, T::lit(2.0) * bc, tol) && exceeds(lhs, rhs, tol)
    } else {
        exceeds(lhs, rhs, tol)
    };
    if fires {
        v.satisfy(&[Conclusion::ManifoldCompact]);
    } else if certified_nonpositive(k) {
        v.status = Status::Violated;
        v.note("K is a non-positive constant: the left side never exceeds the positive right side");
    }
    Ok(v)
}

/// The lambda grid used by [`search_main_b2`] by default.
pub fn default_lambda_grid<T: Real>() -> Vec<T> {
    [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0].iter().map(|&x| T::lit(x)).collect()
}

/// Scans `lambda`, then `a`, then `b > a` in the given order and returns the
/// first satisfied instance (or the best-margin instance when none fires); the
/// best margin over the whole grid is recorded in the witness.
pub fn search_main_b2<T: Real>(
    k: &CurvatureProfile<T>,
    lambdas: &[T],
    a_grid: &[T],
    b_grid: &[T],
    tol: T,
) -> Result<Verdict> {
    let mut first: Option<Verdict> = None;
    let mut best: Option<Verdict> = None;
    let mut all_violated = true;
    let mut evaluated = 0usize;
    for &lambda in lambdas {
        for &a in a_grid {
            for &b in b_grid.iter().filter(|&&b| b > a) {
                let v = check_main_b2(k, a, b, lambda, tol)?;
                evaluated += 1;
                all_violated &= v.status == Status::Violated;
                let margin = v.get("margin").unwrap_or(f64::NEG_INFINITY);
                if best.as_ref().is_none_or(|b| margin > b.get("margin").unwrap_or(f64::NEG_INFINITY)) {
                    best = Some(v.clone());
                }
                if first.is_none() && v.is_satisfied() {
                    first = Some(v);
                }
            }
        }
    }
    let best = best.ok_or_else(|| Error::InvalidParams("empty (lambda, a, b) grid".into()))?;
    let mut out = first.unwrap_or_else(|| best.clone());
    for key in ["a", "b", "lambda", "margin"] {
        out.witness.insert(format!("best_{key}"), best.get(key).unwrap_or(f64::NAN));
    }
    out.witness.insert("grid_size".into(), evaluated as f64);
    if !out.is_satisfied() {
        out.status = if all_violated { Status::Violated } else { Status::Inconclusive };
    }
    Ok(out)
}

/// Threshold on `int_a^b W v` beyond which a solution must vanish.
pub fn first_zero_threshold<T: Real>(pair: &CoefficientPair<T>, b: T, tol: T) -> Result<(T, Option<T>)> {
    let bc = pair.b_const;
    match pair.v_inv_l1_at_infinity() {
        L1Status::NotIntegrable => Ok((T::lit(2.0) * bc, None)),
        L1Status::Integrable => {
            let i = v_inv_integral(pair, b, T::infinity(), tol)?;
            Ok((two_b_v_over_v_minus_one(bc, i), Some(i)))
        }
        L1Status::Unknown => Err(Error::TailInfoMissing(format!(
            "integrability of 1/({}) at infinity is undeclared",
            pair.v.name
        ))),
    }
}

fn check_w_lower_bound<T: Real>(pair: &CoefficientPair<T>) -> Result<()> {
    let grid = pair.sample_grid();
    let b2 = pair.b_const * pair.b_const;
    for (&t, (&vt, &wt)) in grid.iter().zip(pair.v.sample(&grid)?.iter().zip(&pair.w.sample(&grid)?)) {
        if wt * vt * vt < -b2 - T::lit(1e-12) * (T::one() + b2) {
            return Err(Error::HypothesisViolated(format!("W v^2 = {} < -B^2 at t = {t}", wt * vt * vt)));
        }
    }
    Ok(())
}

/// `int_a^b W v` against the first-zero threshold.
pub fn check_first_zero<T: Real>(pair: &CoefficientPair<T>, a: T, b: T, tol: T) -> Result<Verdict> {
    require(a >= T::zero() && a < b, || format!("need 0 <= a < b, got a = {a}, b = {b}"))?;
    check_w_lower_bound(pair)?;
    let lhs = integrate(pair.wv(), a, b, tol)?.value;
    let (rhs, tail) = first_zero_threshold(pair, b, tol)?;
    let mut v = Verdict::new(CriterionId::FirstZero)
        .with("a", a)
        .with("b", b)
        .with("B", pair.b_const)
        .with("lhs", lhs)
        .with("rhs", rhs);
    match tail {
        Some(i) => {
            v.set("v_inv_tail", i);
            v.note("1/v integrable at infinity");
        }
        None => v.note("1/v not integrable at infinity"),
    }
    if exceeds(lhs, rhs, tol) {
        v.satisfy(&[Conclusion::FirstZeroExists]);
    }
    Ok(v)
}

/// Asymptotics of `int^t p` as `t -> inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Growth<T> {
    Converges,
    /// Divergent, with the given leading term.
    Diverges(Term<T>),
    /// `~ c log t`.
    Logarithmic(T),
    Unknown,
}

pub fn cumulative_growth<T: Real>(p: &Profile<T>) -> Growth<T> {
    if matches!(p.tail_class(), TailClass::ClosedForm { .. }) {
        return Growth::Converges;
    }
    match p.tail_class().leading() {
        Asymptote::Zero => Growth::Converges,
        Asymptote::Term(t) if t.integrable_at_infinity() => Growth::Converges,
        Asymptote::Term(t) => t.antiderivative_leading().map_or(Growth::Logarithmic(t.c), Growth::Diverges),
        Asymptote::Unknown => Growth::Unknown,
    }
}

/// Leading term of `int_t^inf p` when `p` is integrable at infinity.
pub fn tail_leading<T: Real>(p: &Profile<T>) -> Option<Term<T>> {
    match p.tail_class() {
        TailClass::ClosedForm { integral, .. } => integral.asymptote().term(),
        tc => tc.leading().term()?.tail_leading(),
    }
}

/// `lim_{t -> inf} int_R^t W v * int_t^inf 1/v`, when the tail classes decide it.
pub fn product_limit<T: Real>(pair: &CoefficientPair<T>) -> Option<T> {
    let g = tail_leading(pair.v_inv())?;
    if !g.vanishes_at_infinity() {
        return None;
    }
    match cumulative_growth(pair.wv()) {
        Growth::Converges | Growth::Logarithmic(_) => Some(T::zero()),
        Growth::Diverges(f) => Some(f.mul(g).limit_at_infinity()),
        Growth::Unknown => None,
    }
}

/// `max` of `int_R^t W v * int_t^inf 1/v` over a geometric grid of `t` in `[R, horizon]`.
fn product_witness<T: Real>(pair: &CoefficientPair<T>, r: T, horizon: T, tol: T) -> Result<(T, T)> {
    let grid = geometric_grid(r, horizon, 48);
    let mut cumulative = T::zero();
    let mut best = (T::neg_infinity(), r);
    for w in grid.windows(2) {
        cumulative = cumulative + integrate(pair.wv(), w[0], w[1], tol)?.value;
        let p = cumulative * v_inv_integral(pair, w[1], T::infinity(), tol)?;
        if p > best.0 {
            best = (p, w[1]);
        }
    }
    Ok(best)
}

/// `sup_{q1 < q2}` of `int_{q1}^{q2} W v` over grid points in `[r, horizon]`.
fn window_sup<T: Real>(pair: &CoefficientPair<T>, r: T, horizon: T, tol: T) -> Result<T> {
    let grid = geometric_grid(r, horizon, 96);
    let mut cumulative = T::zero();
    let mut running_min = T::zero();
    let mut best = T::zero();
    for w in grid.windows(2) {
        cumulative = cumulative + integrate(pair.wv(), w[0], w[1], tol)?.value;
        best = best.max(cumulative - running_min);
        running_min = running_min.min(cumulative);
    }
    Ok(best)
}

/// Oscillation of every solution, branching on the integrability of `1/v` at infinity.
pub fn check_oscillation<T: Real>(pair: &CoefficientPair<T>, r: T, horizon: T, tol: T) -> Result<Verdict> {
    require(r > T::zero() && horizon > r, || format!("need 0 < R < horizon, got R = {r}, horizon = {horizon}"))?;
    check_w_lower_bound(pair)?;
    let mut v = Verdict::new(CriterionId::Oscillation).with("R", r).with("horizon", horizon).with("B", pair.b_const);
    match pair.v_inv_l1_at_infinity() {
        L1Status::Integrable => {
            v.note("1/v integrable at infinity: limsup of int_R^t Wv * int_t^inf 1/v against 1");
            let (max, at) = product_witness(pair, r, horizon, tol)?;
            v.set("max_product", max);
            v.set("argmax_t", at);
            v.set("rhs", T::one());
            match product_limit(pair) {
                Some(l) => {
                    v.set("limit", l);
                    v.set("lhs", l);
                    if exceeds(l, T::one(), tol) {
                        v.satisfy(&[Conclusion::Oscillatory]);
                    }
                }
                None => v.note("limit not decidable from the tail classes"),
            }
        }
        L1Status::NotIntegrable => {
            let rhs = T::lit(2.0) * pair.b_const;
            v.note("1/v not integrable at infinity: windowed sup of int Wv against 2B");
            v.set("window_sup", window_sup(pair, r, horizon, tol)?);
            v.set("rhs", rhs);
            let limit = match cumulative_growth(pair.wv()) {
                Growth::Diverges(t) if t.c > T::zero() => Some(T::infinity()),
                Growth::Logarithmic(c) if c > T::zero() => Some(T::infinity()),
                Growth::Unknown => None,
                // Convergent or eventually negative: windows beyond t shrink to 0.
                _ => Some(T::zero()),
            };
            match limit {
                Some(l) => {
                    v.set("limit", l);
                    v.set("lhs", l);
                    if exceeds(l, rhs, tol) {
                        v.satisfy(&[Conclusion::Oscillatory]);
                    }
                }
                None => v.note("limit not decidable from the tail classes"),
            }
        }
        L1Status::Unknown => {
            return Err(Error::TailInfoMissing(format!(
                "integrability of 1/({}) at infinity is undeclared",
                pair.v.name
            )))
        }
    }
    Ok(v)
}

/// `liminf int_R^t W v * int_t^inf 1/v >= c` with `c > 1/4`. Without an
/// explicit `c` the certified limit itself is used when it exceeds `1/4`.
pub fn check_moore_liminf<T: Real>(
    pair: &CoefficientPair<T>,
    r: T,
    c_thresh: Option<T>,
    horizon: T,
    tol: T,
) -> Result<Verdict> {
    let quarter = T::lit(0.25);
    if let Some(c) = c_thresh {
        require(c > quarter, || format!("the threshold must exceed 1/4, got {c}"))?;
    }
    require(r > T::zero() && horizon > r, || format!("need 0 < R < horizon, got R = {r}, horizon = {horizon}"))?;
    match pair.v_inv_l1_at_infinity() {
        L1Status::Integrable => {}
        L1Status::NotIntegrable => {
            return Err(Error::HypothesisViolated("the liminf condition needs 1/v integrable at infinity".into()))
        }
        L1Status::Unknown => {
            return Err(Error::TailInfoMissing(format!(
                "integrability of 1/({}) at infinity is undeclared",
                pair.v.name
            )))
        }
    }
    let mut v = Verdict::new(CriterionId::MooreLiminf).with("R", r).with("horizon", horizon);
    let (max, at) = product_witness(pair, r, horizon, tol)?;
    v.set("max_product", max);
    v.set("argmax_t", at);
    match product_limit(pair) {
        Some(l) => {
            v.set("liminf", l);
            let ok = match c_thresh {
                Some(c) => {
                    v.set("c", c);
                    l >= c
                }
                None => {
                    v.set("c", quarter);
                    exceeds(l, quarter, tol)
                }
            };
            if ok {
                v.satisfy(&[Conclusion::Oscillatory]);
            }
        }
        None => v.note("liminf not decidable from the tail classes"),
    }
    Ok(v)
}

/// `int_R^inf W v = +inf` when `1/v` is not integrable at infinity.
pub fn check_leighton<T: Real>(pair: &CoefficientPair<T>) -> Result<Verdict> {
    match pair.v_inv_l1_at_infinity() {
        L1Status::NotIntegrable => {}
        L1Status::Integrable => {
            return Err(Error::HypothesisViolated("the divergence condition needs 1/v not integrable at infinity".into()))
        }
        L1Status::Unknown => {
            return Err(Error::TailInfoMissing(format!(
                "integrability of 1/({}) at infinity is undeclared",
                pair.v.name
            )))
        }
    }
    let mut v = Verdict::new(CriterionId::Leighton);
    match pair.wv().divergence() {
        Divergence::PlusInfinity => {
            v.set("limit", f64::INFINITY);
            v.satisfy(&[Conclusion::Oscillatory]);
        }
        Divergence::Unknown => {
            return Err(Error::TailInfoMissing(format!("profile `{}` has no declared tail behaviour", pair.wv().name)))
        }
        Divergence::Finite => v.note("int Wv converges"),
        Divergence::MinusInfinity => v.note("int Wv diverges to -inf"),
    }
    Ok(v)
}

/// `limsup int_T^t (sqrt W - sqrt chi) = +inf` with `chi = 1 / (4 v^2 G^2)`,
/// `G(t) = int_t^inf 1/v`, for `W >= 0`.
pub fn check_bmr<T: Real>(pair: &CoefficientPair<T>, t_lower: T, horizon: T, tol: T) -> Result<Verdict> {
    require(t_lower > T::zero() && horizon > t_lower, || {
        format!("need 0 < T < horizon, got T = {t_lower}, horizon = {horizon}")
    })?;
    for (&t, &w) in pair.sample_grid().iter().zip(&pair.w.sample(&pair.sample_grid())?) {
        if w < T::zero() {
            return Err(Error::HypothesisViolated(format!("W({t}) = {w} < 0")));
        }
    }
    if pair.v_inv_l1_at_infinity() != L1Status::Integrable {
        return Err(Error::HypothesisViolated("the critical function needs 1/v integrable at infinity".into()));
    }
    let sqrt_w = pair.w.sqrt();
    let integrand = |t: T| -> T {
        let g = tail_integral(pair.v_inv(), t, tol).unwrap_or(T::nan());
        sqrt_w.eval(t) - T::one() / (T::lit(2.0) * pair.v.eval(t) * g)
    };
    let mut v = Verdict::new(CriterionId::Bmr).with("T", t_lower).with("horizon", horizon);
    let grid = geometric_grid(t_lower, horizon, 32);
    let opts = crate::quadrature::QuadOptions::with_tol(tol);
    let mut cumulative = T::zero();
    let mut best = (T::neg_infinity(), t_lower);
    for w in grid.windows(2) {
        cumulative = cumulative + crate::quadrature::integrate_fn(integrand, w[0], w[1], &opts)?.value;
        if cumulative > best.0 {
            best = (cumulative, w[1]);
        }
    }
    v.set("max_cumulative", best.0);
    v.set("argmax_t", best.1);
    let chi_root = match (pair.v_inv().tail_class().leading().term(), tail_leading(pair.v_inv())) {
        (Some(vi), Some(g)) => Asymptote::Term(vi.div(g).mul(Term::power(T::lit(0.5), T::zero()))),
        _ => Asymptote::Unknown,
    };
    match sqrt_w.tail_class().leading().add(chi_root.neg()) {
        Asymptote::Term(t) if t.c > T::zero() && !t.integrable_at_infinity() => {
            v.set("limit", T::infinity());
            v.satisfy(&[Conclusion::Oscillatory]);
        }
        Asymptote::Unknown => v.note("integrand asymptotics not decidable from the tail classes"),
        _ => v.note("integrand is eventually non-positive or integrable"),
    }
    Ok(v)
}

/// `2 int_0^{D/4} t^2 K > D`, giving `diam <= D`.
pub fn check_diameter_remark<T: Real>(k: &CurvatureProfile<T>, d: T, tol: T) -> Result<Verdict> {
    require(d > T::zero(), || format!("D must be positive, got {d}"))?;
    let lhs = T::lit(2.0) * weighted_moment(k, T::lit(2.0), T::zero(), d * T::lit(0.25), tol)?;
    let mut v = Verdict::new(CriterionId::DiameterRemark).with("D", d).with("lhs", lhs).with("rhs", d);
    if exceeds(lhs, d, tol) {
        v.satisfy(&[Conclusion::DiameterBound(d.as_f64()), Conclusion::ManifoldCompact]);
    } else if certified_nonpositive(k) {
        v.status = Status::Violated;
        v.note("K is a non-positive constant");
    }
    Ok(v)
}
