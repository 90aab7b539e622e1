//! Closed-form coefficient expressions in one variable `t`.
//!
//! Besides evaluation and symbolic differentiation, an expression can report
//! its leading behaviour at `t -> inf` (a single term `c t^p e^{rate t}`) and
//! at `t -> 0+`. Those two analyses are what the criterion checkers use to
//! decide divergence and limits without sampling.

use crate::scalar::Real;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr<T> {
    Const(T),
    /// The independent variable `t`.
    Var,
    Add(Box<Expr<T>>, Box<Expr<T>>),
    Mul(Box<Expr<T>>, Box<Expr<T>>),
    Div(Box<Expr<T>>, Box<Expr<T>>),
    Neg(Box<Expr<T>>),
    Powf(Box<Expr<T>>, T),
    Exp(Box<Expr<T>>),
    Ln(Box<Expr<T>>),
    Sin(Box<Expr<T>>),
    Cos(Box<Expr<T>>),
    Sinh(Box<Expr<T>>),
    Cosh(Box<Expr<T>>),
}

/// `c * t^p * exp(rate * t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term<T> {
    pub c: T,
    pub p: T,
    pub rate: T,
}

impl<T: Real> Term<T> {
    pub fn new(c: T, p: T, rate: T) -> Self {
        Term { c, p, rate }
    }

    pub fn power(c: T, p: T) -> Self {
        Term { c, p, rate: T::zero() }
    }

    pub fn mul(self, o: Self) -> Self {
        Term::new(self.c * o.c, self.p + o.p, self.rate + o.rate)
    }

    pub fn div(self, o: Self) -> Self {
        Term::new(self.c / o.c, self.p - o.p, self.rate - o.rate)
    }

    pub fn powf(self, k: T) -> Option<Self> {
        if self.c > T::zero() {
            Some(Term::new(self.c.powf(k), self.p * k, self.rate * k))
        } else if k.fract() == T::zero() {
            Some(Term::new(int_pow(self.c, k), self.p * k, self.rate * k))
        } else {
            None
        }
    }

    /// Growth order at infinity, compared lexicographically on (rate, p).
    pub fn order_cmp(&self, o: &Self) -> Ordering {
        self.rate
            .partial_cmp(&o.rate)
            .unwrap_or(Ordering::Equal)
            .then(self.p.partial_cmp(&o.p).unwrap_or(Ordering::Equal))
    }

    fn same_order(&self, o: &Self) -> bool {
        self.rate == o.rate && self.p == o.p
    }

    /// Whether `int^inf` of this term is finite.
    pub fn integrable_at_infinity(&self) -> bool {
        self.rate < T::zero() || (self.rate == T::zero() && self.p < -T::one())
    }

    /// Whether the term tends to zero as `t -> inf`.
    pub fn vanishes_at_infinity(&self) -> bool {
        self.rate < T::zero() || (self.rate == T::zero() && self.p < T::zero())
    }

    /// Limit as `t -> inf`: `0`, `c`, or `+-inf`.
    pub fn limit_at_infinity(&self) -> T {
        if self.vanishes_at_infinity() {
            T::zero()
        } else if self.rate == T::zero() && self.p == T::zero() {
            self.c
        } else if self.c > T::zero() {
            T::infinity()
        } else {
            T::neg_infinity()
        }
    }

    pub fn eval(&self, t: T) -> T {
        self.c * t.powf(self.p) * (self.rate * t).exp()
    }

    /// Leading term of `int^t` of this term when the integral diverges.
    /// `None` for the logarithmic case (`rate = 0, p = -1`) and for integrable terms.
    pub fn antiderivative_leading(&self) -> Option<Self> {
        if self.rate > T::zero() {
            Some(Term::new(self.c / self.rate, self.p, self.rate))
        } else if self.rate == T::zero() && self.p > -T::one() {
            let q = self.p + T::one();
            Some(Term::new(self.c / q, q, T::zero()))
        } else {
            None
        }
    }

    /// Leading term of `int_t^inf` of this term when it converges.
    pub fn tail_leading(&self) -> Option<Self> {
        if self.rate < T::zero() {
            Some(Term::new(self.c / -self.rate, self.p, self.rate))
        } else if self.rate == T::zero() && self.p < -T::one() {
            let q = self.p + T::one();
            Some(Term::new(self.c / -q, q, T::zero()))
        } else {
            None
        }
    }
}

fn int_pow<T: Real>(x: T, k: T) -> T {
    match k.to_i32() {
        Some(n) => x.powi(n),
        None => x.powf(k),
    }
}

/// Leading behaviour of an expression as `t -> inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Asymptote<T> {
    /// Identically zero for large `t`.
    Zero,
    Term(Term<T>),
    Unknown,
}

impl<T: Real> Asymptote<T> {
    pub fn term(&self) -> Option<Term<T>> {
        match self {
            Asymptote::Term(t) => Some(*t),
            _ => None,
        }
    }

    pub fn mul(self, o: Self) -> Self {
        match (self, o) {
            (Asymptote::Zero, _) | (_, Asymptote::Zero) => Asymptote::Zero,
            (Asymptote::Term(a), Asymptote::Term(b)) => Asymptote::Term(a.mul(b)),
            _ => Asymptote::Unknown,
        }
    }

    pub fn div(self, o: Self) -> Self {
        match (self, o) {
            (_, Asymptote::Zero) => Asymptote::Unknown,
            (Asymptote::Zero, Asymptote::Term(_)) => Asymptote::Zero,
            (Asymptote::Term(a), Asymptote::Term(b)) => Asymptote::Term(a.div(b)),
            _ => Asymptote::Unknown,
        }
    }

    pub fn add(self, o: Self) -> Self {
        match (self, o) {
            (Asymptote::Zero, x) | (x, Asymptote::Zero) => x,
            (Asymptote::Term(a), Asymptote::Term(b)) => {
                if a.same_order(&b) {
                    let c = a.c + b.c;
                    if c == T::zero() {
                        Asymptote::Unknown
                    } else {
                        Asymptote::Term(Term::new(c, a.p, a.rate))
                    }
                } else if a.order_cmp(&b) == Ordering::Greater {
                    Asymptote::Term(a)
                } else {
                    Asymptote::Term(b)
                }
            }
            _ => Asymptote::Unknown,
        }
    }

    pub fn neg(self) -> Self {
        match self {
            Asymptote::Term(t) => Asymptote::Term(Term::new(-t.c, t.p, t.rate)),
            x => x,
        }
    }

    fn tends_to_zero(&self) -> bool {
        match self {
            Asymptote::Zero => true,
            Asymptote::Term(t) => t.vanishes_at_infinity(),
            Asymptote::Unknown => false,
        }
    }
}

/// Leading behaviour of an expression as `t -> 0+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NearZero<T> {
    Zero,
    /// `~ c t^p`
    Power { c: T, p: T },
    Logarithmic,
    Unknown,
}

impl<T: Real> NearZero<T> {
    fn mul(self, o: Self) -> Self {
        use NearZero::*;
        match (self, o) {
            (Zero, _) | (_, Zero) => Zero,
            (Power { c: a, p: p1 }, Power { c: b, p: p2 }) => Power { c: a * b, p: p1 + p2 },
            (Logarithmic, Power { p, .. }) | (Power { p, .. }, Logarithmic) if p == T::zero() => {
                Logarithmic
            }
            _ => Unknown,
        }
    }

    fn add(self, o: Self) -> Self {
        use NearZero::*;
        match (self, o) {
            (Zero, x) | (x, Zero) => x,
            (Power { c: a, p: p1 }, Power { c: b, p: p2 }) => {
                if p1 == p2 {
                    let c = a + b;
                    if c == T::zero() {
                        Unknown
                    } else {
                        Power { c, p: p1 }
                    }
                } else if p1 < p2 {
                    Power { c: a, p: p1 }
                } else {
                    Power { c: b, p: p2 }
                }
            }
            (Logarithmic, Power { c, p }) | (Power { c, p }, Logarithmic) => {
                if p < T::zero() {
                    Power { c, p }
                } else {
                    Logarithmic
                }
            }
            _ => Unknown,
        }
    }

    fn neg(self) -> Self {
        match self {
            NearZero::Power { c, p } => NearZero::Power { c: -c, p },
            x => x,
        }
    }

    /// Whether the function tends to zero as `t -> 0+`.
    fn to_zero(&self) -> bool {
        matches!(self, NearZero::Zero) || matches!(self, NearZero::Power { p, .. } if *p > T::zero())
    }
}

impl<T: Real> Expr<T> {
    pub fn c(x: T) -> Self {
        Expr::Const(x)
    }

    pub fn lit(x: f64) -> Self {
        Expr::Const(T::lit(x))
    }

    pub fn t() -> Self {
        Expr::Var
    }

    pub fn zero() -> Self {
        Expr::Const(T::zero())
    }

    pub fn one() -> Self {
        Expr::Const(T::one())
    }

    /// `c t^p`.
    pub fn monomial(c: T, p: T) -> Self {
        Expr::c(c) * Expr::t().powf(p)
    }

    pub fn as_const(&self) -> Option<T> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn powf(self, k: T) -> Self {
        if k == T::zero() {
            return Expr::one();
        }
        if k == T::one() {
            return self;
        }
        match self {
            Expr::Const(c) => Expr::Const(int_or_powf(c, k)),
            e => Expr::Powf(Box::new(e), k),
        }
    }

    pub fn sqrt(self) -> Self {
        self.powf(T::lit(0.5))
    }

    pub fn exp(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(c.exp()),
            e => Expr::Exp(Box::new(e)),
        }
    }

    pub fn ln(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(c.ln()),
            e => Expr::Ln(Box::new(e)),
        }
    }

    pub fn sin(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(c.sin()),
            e => Expr::Sin(Box::new(e)),
        }
    }

    pub fn cos(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(c.cos()),
            e => Expr::Cos(Box::new(e)),
        }
    }

    pub fn sinh(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(c.sinh()),
            e => Expr::Sinh(Box::new(e)),
        }
    }

    pub fn cosh(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(c.cosh()),
            e => Expr::Cosh(Box::new(e)),
        }
    }

    pub fn recip(self) -> Self {
        Expr::one() / self
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => t,
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Neg(a) => -a.eval(t),
            Expr::Powf(a, k) => int_or_powf(a.eval(t), *k),
            Expr::Exp(a) => a.eval(t).exp(),
            Expr::Ln(a) => a.eval(t).ln(),
            Expr::Sin(a) => a.eval(t).sin(),
            Expr::Cos(a) => a.eval(t).cos(),
            Expr::Sinh(a) => a.eval(t).sinh(),
            Expr::Cosh(a) => a.eval(t).cosh(),
        }
    }

    /// Symbolic derivative with respect to `t`.
    pub fn derivative(&self) -> Self {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var => Expr::one(),
            Expr::Add(a, b) => a.derivative() + b.derivative(),
            Expr::Mul(a, b) => a.derivative() * (**b).clone() + (**a).clone() * b.derivative(),
            Expr::Div(a, b) => {
                (a.derivative() * (**b).clone() - (**a).clone() * b.derivative())
                    / (**b).clone().powf(T::lit(2.0))
            }
            Expr::Neg(a) => -a.derivative(),
            Expr::Powf(a, k) => {
                Expr::c(*k) * (**a).clone().powf(*k - T::one()) * a.derivative()
            }
            Expr::Exp(a) => self.clone() * a.derivative(),
            Expr::Ln(a) => a.derivative() / (**a).clone(),
            Expr::Sin(a) => (**a).clone().cos() * a.derivative(),
            Expr::Cos(a) => -((**a).clone().sin() * a.derivative()),
            Expr::Sinh(a) => (**a).clone().cosh() * a.derivative(),
            Expr::Cosh(a) => (**a).clone().sinh() * a.derivative(),
        }
    }

    /// Exact representation as a finite sum of terms `c t^p e^{rate t}`, if one exists.
    /// Like terms are merged and zero coefficients dropped.
    pub fn exact_terms(&self) -> Option<Vec<Term<T>>> {
        let raw = self.raw_terms()?;
        Some(normalize(raw))
    }

    fn raw_terms(&self) -> Option<Vec<Term<T>>> {
        let zero = T::zero();
        match self {
            Expr::Const(c) => Some(if *c == zero {
                vec![]
            } else {
                vec![Term::power(*c, zero)]
            }),
            Expr::Var => Some(vec![Term::power(T::one(), T::one())]),
            Expr::Add(a, b) => {
                let mut x = a.raw_terms()?;
                x.extend(b.raw_terms()?);
                Some(x)
            }
            Expr::Neg(a) => Some(
                a.raw_terms()?
                    .into_iter()
                    .map(|t| Term::new(-t.c, t.p, t.rate))
                    .collect(),
            ),
            Expr::Mul(a, b) => {
                let x = a.exact_terms()?;
                let y = b.exact_terms()?;
                Some(
                    x.iter()
                        .flat_map(|s| y.iter().map(move |u| s.mul(*u)))
                        .collect(),
                )
            }
            Expr::Div(a, b) => {
                let y = b.exact_terms()?;
                if y.len() != 1 {
                    return None;
                }
                let x = a.exact_terms()?;
                Some(x.into_iter().map(|s| s.div(y[0])).collect())
            }
            Expr::Powf(a, k) => {
                let x = a.exact_terms()?;
                if x.len() == 1 {
                    return x[0].powf(*k).map(|t| vec![t]);
                }
                if x.is_empty() {
                    return if *k > zero { Some(vec![]) } else { None };
                }
                let n = k.to_i32().filter(|n| *n >= 2 && *n <= 6 && T::lit(*n as f64) == *k)?;
                let mut acc = x.clone();
                for _ in 1..n {
                    acc = normalize(
                        acc.iter()
                            .flat_map(|s| x.iter().map(move |u| s.mul(*u)))
                            .collect(),
                    );
                }
                Some(acc)
            }
            Expr::Exp(a) => {
                let (s0, s1) = linear_coeffs(&a.exact_terms()?)?;
                Some(vec![Term::new(s0.exp(), zero, s1)])
            }
            Expr::Sinh(a) | Expr::Cosh(a) => {
                let (s0, s1) = linear_coeffs(&a.exact_terms()?)?;
                let half = T::lit(0.5);
                let sign = if matches!(self, Expr::Sinh(_)) { -T::one() } else { T::one() };
                Some(vec![
                    Term::new(half * s0.exp(), zero, s1),
                    Term::new(sign * half * (-s0).exp(), zero, -s1),
                ])
            }
            Expr::Ln(_) | Expr::Sin(_) | Expr::Cos(_) => None,
        }
    }

    /// Leading term as `t -> inf`.
    pub fn asymptote(&self) -> Asymptote<T> {
        if let Some(terms) = self.exact_terms() {
            return dominant(&terms);
        }
        match self {
            Expr::Const(_) | Expr::Var => unreachable!("constants and t are exact"),
            Expr::Add(a, b) => a.asymptote().add(b.asymptote()),
            Expr::Mul(a, b) => a.asymptote().mul(b.asymptote()),
            Expr::Div(a, b) => a.asymptote().div(b.asymptote()),
            Expr::Neg(a) => a.asymptote().neg(),
            Expr::Powf(a, k) => match a.asymptote() {
                Asymptote::Zero if *k > T::zero() => Asymptote::Zero,
                Asymptote::Term(t) => t.powf(*k).map_or(Asymptote::Unknown, Asymptote::Term),
                _ => Asymptote::Unknown,
            },
            Expr::Exp(a) | Expr::Cosh(a) | Expr::Cos(a) => {
                if a.asymptote().tends_to_zero() {
                    Asymptote::Term(Term::power(T::one(), T::zero()))
                } else {
                    Asymptote::Unknown
                }
            }
            Expr::Sinh(a) | Expr::Sin(a) => {
                let x = a.asymptote();
                if x.tends_to_zero() {
                    x
                } else {
                    Asymptote::Unknown
                }
            }
            Expr::Ln(a) => match a.asymptote() {
                Asymptote::Term(t)
                    if t.rate == T::zero() && t.p == T::zero() && t.c > T::zero() && t.c != T::one() =>
                {
                    Asymptote::Term(Term::power(t.c.ln(), T::zero()))
                }
                _ => Asymptote::Unknown,
            },
        }
    }

    /// Leading behaviour as `t -> 0+`.
    pub fn near_zero(&self) -> NearZero<T> {
        use NearZero::*;
        let zero = T::zero();
        match self {
            Expr::Const(c) => {
                if *c == zero {
                    Zero
                } else {
                    Power { c: *c, p: zero }
                }
            }
            Expr::Var => Power { c: T::one(), p: T::one() },
            Expr::Add(a, b) => a.near_zero().add(b.near_zero()),
            Expr::Mul(a, b) => a.near_zero().mul(b.near_zero()),
            Expr::Div(a, b) => match (a.near_zero(), b.near_zero()) {
                (Zero, Power { .. }) => Zero,
                (Power { c: x, p: p1 }, Power { c: y, p: p2 }) => Power { c: x / y, p: p1 - p2 },
                _ => Unknown,
            },
            Expr::Neg(a) => a.near_zero().neg(),
            Expr::Powf(a, k) => match a.near_zero() {
                Zero if *k > zero => Zero,
                Power { c, p } if c > zero || k.fract() == zero => Power { c: int_or_powf(c, *k), p: p * *k },
                _ => Unknown,
            },
            Expr::Exp(a) | Expr::Cos(a) | Expr::Cosh(a) => {
                let x = a.near_zero();
                if x.to_zero() {
                    return Power { c: T::one(), p: zero };
                }
                match x {
                    Power { c, p } if p == zero => {
                        let v = match self {
                            Expr::Exp(_) => c.exp(),
                            Expr::Cos(_) => c.cos(),
                            _ => c.cosh(),
                        };
                        if v == zero {
                            Unknown
                        } else {
                            Power { c: v, p: zero }
                        }
                    }
                    _ => Unknown,
                }
            }
            Expr::Sin(a) | Expr::Sinh(a) => {
                let x = a.near_zero();
                if x.to_zero() {
                    return x;
                }
                match x {
                    Power { c, p } if p == zero => {
                        let v = if matches!(self, Expr::Sin(_)) { c.sin() } else { c.sinh() };
                        if v == zero {
                            Unknown
                        } else {
                            Power { c: v, p: zero }
                        }
                    }
                    _ => Unknown,
                }
            }
            Expr::Ln(a) => match a.near_zero() {
                Power { c, p } if p == zero && c > zero && c != T::one() => Power { c: c.ln(), p: zero },
                Power { c, p } if p != zero && c > zero => Logarithmic,
                _ => Unknown,
            },
        }
    }

    /// Closed-form `b -> int_b^inf self` when the expression is an exact sum of
    /// terms that are each integrable in closed form (`t^p` with `p < -1`, or
    /// `e^{rate t}` with `rate < 0`).
    pub fn closed_tail(&self) -> Option<Expr<T>> {
        let terms = self.exact_terms()?;
        let mut acc = Expr::zero();
        for s in terms {
            if s.rate == T::zero() && s.p < -T::one() {
                let q = s.p + T::one();
                acc = acc + Expr::monomial(s.c / -q, q);
            } else if s.rate < T::zero() && s.p == T::zero() {
                acc = acc + Expr::c(s.c / -s.rate) * (Expr::c(s.rate) * Expr::t()).exp();
            } else {
                return None;
            }
        }
        Some(acc)
    }
}

fn int_or_powf<T: Real>(x: T, k: T) -> T {
    if k.fract() == T::zero() {
        int_pow(x, k)
    } else {
        x.powf(k)
    }
}

fn linear_coeffs<T: Real>(terms: &[Term<T>]) -> Option<(T, T)> {
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    for t in terms {
        if t.rate != T::zero() {
            return None;
        }
        if t.p == T::zero() {
            s0 = s0 + t.c;
        } else if t.p == T::one() {
            s1 = s1 + t.c;
        } else {
            return None;
        }
    }
    Some((s0, s1))
}

fn normalize<T: Real>(raw: Vec<Term<T>>) -> Vec<Term<T>> {
    let mut out: Vec<Term<T>> = Vec::new();
    for t in raw {
        if let Some(x) = out.iter_mut().find(|x| x.same_order(&t)) {
            x.c = x.c + t.c;
        } else {
            out.push(t);
        }
    }
    out.retain(|t| t.c != T::zero());
    out.sort_by(|a, b| b.order_cmp(a));
    out
}

fn dominant<T: Real>(terms: &[Term<T>]) -> Asymptote<T> {
    match terms.first() {
        None => Asymptote::Zero,
        Some(t) => Asymptote::Term(*t),
    }
}

impl<T: Real> Add for Expr<T> {
    type Output = Expr<T>;
    fn add(self, o: Self) -> Self {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
            (Expr::Const(a), x) | (x, Expr::Const(a)) if a == T::zero() => x,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }
}

impl<T: Real> Sub for Expr<T> {
    type Output = Expr<T>;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Real> Mul for Expr<T> {
    type Output = Expr<T>;
    fn mul(self, o: Self) -> Self {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            (Expr::Const(a), _) | (_, Expr::Const(a)) if a == T::zero() => Expr::zero(),
            (Expr::Const(a), x) | (x, Expr::Const(a)) if a == T::one() => x,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }
}

impl<T: Real> Div for Expr<T> {
    type Output = Expr<T>;
    fn div(self, o: Self) -> Self {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a / b),
            (Expr::Const(a), _) if a == T::zero() => Expr::zero(),
            (x, Expr::Const(b)) if b == T::one() => x,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }
}

impl<T: Real> Neg for Expr<T> {
    type Output = Expr<T>;
    fn neg(self) -> Self {
        match self {
            Expr::Const(a) => Expr::Const(-a),
            Expr::Neg(a) => *a,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

impl<T: Real> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => write!(f, "t"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "({a})/({b})"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Powf(a, k) => write!(f, "({a})^{k}"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Sinh(a) => write!(f, "sinh({a})"),
            Expr::Cosh(a) => write!(f, "cosh({a})"),
        }
    }
}
