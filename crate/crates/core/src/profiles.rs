//! Coefficient profiles (K, v, W), their asymptotic metadata, and the integral
//! functionals built on them.

use crate::error::{Error, Result};
use crate::expr::{Asymptote, Expr, NearZero, Term};
use crate::quadrature::{integrate_fn, integrate_to_infinity, QuadOptions, Quadrature};
use crate::scalar::Real;

/// Behaviour of a profile as `t -> 0+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartBehavior<T> {
    FiniteLimit(T),
    /// `~ c t^p` with `p != 0`.
    Power { c: T, p: T },
    Logarithmic,
    Unknown,
}

/// Declared behaviour at `t -> inf`.
#[derive(Clone, Debug, PartialEq)]
pub enum TailClass<T> {
    /// `f(t) / (c t^p) -> 1`.
    Power { c: T, p: T },
    /// `f(t) / (c t^p e^{rate t}) -> 1`, `rate != 0`.
    Exp { c: T, rate: T, p: T },
    /// `int_b^inf f = integral(b)` exactly; `leading` keeps the asymptotic term.
    ClosedForm { integral: Expr<T>, leading: Asymptote<T> },
    NoTailInfo,
}

impl<T: Real> TailClass<T> {
    pub fn leading(&self) -> Asymptote<T> {
        match self {
            TailClass::Power { c, p } => Asymptote::Term(Term::power(*c, *p)),
            TailClass::Exp { c, rate, p } => Asymptote::Term(Term::new(*c, *p, *rate)),
            TailClass::ClosedForm { leading, .. } => *leading,
            TailClass::NoTailInfo => Asymptote::Unknown,
        }
    }

    fn derive(expr: &Expr<T>) -> Self {
        let leading = expr.asymptote();
        if let Some(integral) = expr.closed_tail() {
            return TailClass::ClosedForm { integral, leading };
        }
        match leading {
            Asymptote::Term(t) if t.rate == T::zero() => TailClass::Power { c: t.c, p: t.p },
            Asymptote::Term(t) => TailClass::Exp { c: t.c, rate: t.rate, p: t.p },
            _ => TailClass::NoTailInfo,
        }
    }
}

/// Three-valued integrability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L1Status {
    Integrable,
    NotIntegrable,
    Unknown,
}

/// Fate of `int^t f` as `t -> inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divergence {
    PlusInfinity,
    MinusInfinity,
    Finite,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct Profile<T> {
    pub name: String,
    expr: Expr<T>,
    start: StartBehavior<T>,
    tail: TailClass<T>,
    pub smoothness_note: String,
}

impl<T: Real> Profile<T> {
    pub fn new(name: impl Into<String>, expr: Expr<T>) -> Self {
        let start = match expr.near_zero() {
            NearZero::Zero => StartBehavior::FiniteLimit(T::zero()),
            NearZero::Power { c, p } if p == T::zero() => StartBehavior::FiniteLimit(c),
            NearZero::Power { c, p } => StartBehavior::Power { c, p },
            NearZero::Logarithmic => StartBehavior::Logarithmic,
            NearZero::Unknown => StartBehavior::Unknown,
        };
        let tail = TailClass::derive(&expr);
        Profile { name: name.into(), expr, start, tail, smoothness_note: String::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(format!("{c}"), Expr::c(c))
    }

    /// `c t^p`
    pub fn power(c: T, p: T) -> Self {
        Self::new(format!("{c}*t^{p}"), Expr::monomial(c, p))
    }

    /// `c e^{rate t}`
    pub fn exponential(c: T, rate: T) -> Self {
        Self::new(format!("{c}*exp({rate}*t)"), Expr::c(c) * (Expr::c(rate) * Expr::t()).exp())
    }

    /// Overrides the derived tail class.
    pub fn with_tail(mut self, tail: TailClass<T>) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.smoothness_note = note.into();
        self
    }

    pub fn expr(&self) -> &Expr<T> {
        &self.expr
    }

    pub fn start_behavior(&self) -> StartBehavior<T> {
        self.start
    }

    pub fn tail_class(&self) -> &TailClass<T> {
        &self.tail
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        self.expr.eval(t)
    }

    pub fn product(&self, other: &Profile<T>) -> Profile<T> {
        Profile::new(
            format!("({})*({})", self.name, other.name),
            self.expr.clone() * other.expr.clone(),
        )
    }

    pub fn reciprocal(&self) -> Profile<T> {
        Profile::new(format!("1/({})", self.name), self.expr.clone().recip())
    }

    pub fn sqrt(&self) -> Profile<T> {
        Profile::new(format!("sqrt({})", self.name), self.expr.clone().sqrt())
    }

    pub fn scaled(&self, k: T) -> Profile<T> {
        Profile::new(format!("{k}*({})", self.name), Expr::c(k) * self.expr.clone())
    }

    pub fn is_constant(&self) -> Option<T> {
        self.expr.as_const()
    }

    pub fn l1_at_zero(&self) -> L1Status {
        match self.start {
            StartBehavior::FiniteLimit(_) | StartBehavior::Logarithmic => L1Status::Integrable,
            StartBehavior::Power { p, .. } if p > -T::one() => L1Status::Integrable,
            StartBehavior::Power { .. } => L1Status::NotIntegrable,
            StartBehavior::Unknown => L1Status::Unknown,
        }
    }

    pub fn l1_at_infinity(&self) -> L1Status {
        if matches!(self.tail, TailClass::ClosedForm { .. }) {
            return L1Status::Integrable;
        }
        match self.tail.leading() {
            Asymptote::Zero => L1Status::Integrable,
            Asymptote::Term(t) if t.integrable_at_infinity() => L1Status::Integrable,
            Asymptote::Term(_) => L1Status::NotIntegrable,
            Asymptote::Unknown => L1Status::Unknown,
        }
    }

    /// Fate of `int^t self` as `t -> inf`, decided from the tail class alone.
    pub fn divergence(&self) -> Divergence {
        if matches!(self.tail, TailClass::ClosedForm { .. }) {
            return Divergence::Finite;
        }
        match self.tail.leading() {
            Asymptote::Zero => Divergence::Finite,
            Asymptote::Term(t) if t.integrable_at_infinity() => Divergence::Finite,
            Asymptote::Term(t) if t.c > T::zero() => Divergence::PlusInfinity,
            Asymptote::Term(_) => Divergence::MinusInfinity,
            Asymptote::Unknown => Divergence::Unknown,
        }
    }

    /// Samples the profile on `grid`, failing on the first non-finite value.
    pub fn sample(&self, grid: &[T]) -> Result<Vec<T>> {
        grid.iter()
            .map(|&t| {
                let y = self.eval(t);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::NonFiniteSample { t: t.as_f64(), value: y.as_f64() })
                }
            })
            .collect()
    }
}

/// Geometric grid of `n >= 2` points from `lo` to `hi` (both > 0).
pub fn geometric_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let n = n.max(2);
    let ratio = (hi / lo).ln() / T::lit((n - 1) as f64);
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (ratio * T::lit(i as f64)).exp() })
        .collect()
}

/// Uniform grid of `n >= 2` points from `lo` to `hi`.
pub fn linear_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let n = n.max(2);
    let step = (hi - lo) / T::lit((n - 1) as f64);
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * T::lit(i as f64) })
        .collect()
}

/// `int_a^b p` for `a < b`; `b = inf` is delegated to [`tail_integral`].
pub fn integrate<T: Real>(p: &Profile<T>, a: T, b: T, tol: T) -> Result<Quadrature<T>> {
    if b.is_infinite() && b > T::zero() {
        let value = tail_integral(p, a, tol)?;
        return Ok(Quadrature { value, error: tol * (T::one() + value.abs()), panels: 0 });
    }
    integrate_fn(|t| p.eval(t), a, b, &QuadOptions::with_tol(tol))
}

/// `int_b^inf p`, possibly `+-inf`.
pub fn tail_integral<T: Real>(p: &Profile<T>, b: T, tol: T) -> Result<T> {
    let opts = QuadOptions::with_tol(tol);
    let march = |f_tail: &dyn Fn(T) -> T| {
        integrate_to_infinity(|t| p.eval(t), b, f_tail, &opts).map(|q| q.value)
    };
    let signed_inf = |c: T| if c >= T::zero() { T::infinity() } else { T::neg_infinity() };
    match p.tail_class() {
        TailClass::ClosedForm { integral, .. } => Ok(integral.eval(b)),
        TailClass::Power { c, p: ex } => {
            if *c == T::zero() {
                Ok(T::zero())
            } else if *ex >= -T::one() {
                Ok(signed_inf(*c))
            } else {
                let (c, q) = (*c, *ex + T::one());
                march(&|x: T| c * x.powf(q) / -q)
            }
        }
        TailClass::Exp { c, rate, p: ex } => {
            if *rate > T::zero() {
                Ok(signed_inf(*c))
            } else {
                let (c, rate, ex) = (*c, *rate, *ex);
                march(&|x: T| c * x.powf(ex) * (rate * x).exp() / -rate)
            }
        }
        TailClass::NoTailInfo => Err(Error::TailInfoMissing(format!(
            "profile `{}` has no declared tail behaviour",
            p.name
        ))),
    }
}

/// `(v, W)` for `(v z')' + W v z = 0` together with the constant `B` of `W v^2 >= -B^2`.
#[derive(Clone, Debug)]
pub struct CoefficientPair<T> {
    pub v: Profile<T>,
    pub w: Profile<T>,
    pub b_const: T,
    /// Left end of the domain: `0` for the singular problem, `> 0` for a regular start.
    pub start: T,
    v_inv: Profile<T>,
    wv: Profile<T>,
    v_inv_l1_at_zero: L1Status,
    v_inv_l1_at_infinity: L1Status,
}

impl<T: Real> CoefficientPair<T> {
    pub fn new(v: Profile<T>, w: Profile<T>, b_const: T) -> Self {
        let v_inv = v.reciprocal();
        let wv = w.product(&v);
        let v_inv_l1_at_zero = v_inv.l1_at_zero();
        let v_inv_l1_at_infinity = v_inv.l1_at_infinity();
        CoefficientPair {
            v,
            w,
            b_const,
            start: T::zero(),
            v_inv,
            wv,
            v_inv_l1_at_zero,
            v_inv_l1_at_infinity,
        }
    }

    /// Restricts the problem to `[start, inf)` with a regular initial point.
    pub fn with_start(mut self, start: T) -> Self {
        self.start = start;
        self
    }

    /// Overrides the derived integrability of `1/v` at infinity.
    pub fn with_v_inv_l1_at_infinity(mut self, status: L1Status) -> Self {
        self.v_inv_l1_at_infinity = status;
        self
    }

    /// Replaces the tail class of `1/v`, e.g. with a known closed form.
    pub fn with_v_inv_tail(mut self, tail: TailClass<T>) -> Self {
        self.v_inv = self.v_inv.with_tail(tail);
        self.v_inv_l1_at_infinity = self.v_inv.l1_at_infinity();
        self
    }

    pub fn v_inv(&self) -> &Profile<T> {
        &self.v_inv
    }

    /// The product `W v`.
    pub fn wv(&self) -> &Profile<T> {
        &self.wv
    }

    pub fn v_inv_l1_at_zero(&self) -> L1Status {
        self.v_inv_l1_at_zero
    }

    pub fn v_inv_l1_at_infinity(&self) -> L1Status {
        self.v_inv_l1_at_infinity
    }

    /// Whether the problem starts at the singular origin.
    pub fn singular_start(&self) -> bool {
        self.start == T::zero()
    }

    /// Default grid used for sampled hypothesis checks.
    pub fn sample_grid(&self) -> Vec<T> {
        let lo = if self.singular_start() { T::lit(1e-6) } else { self.start };
        geometric_grid(lo, lo.max(T::one()) * T::lit(1e3), 400)
    }

    /// Checks the admissibility conditions on `v` and `W` on sampled grids.
    pub fn check_admissible(&self) -> Result<()> {
        let grid = self.sample_grid();
        let v = self.v.sample(&grid)?;
        let w = self.w.sample(&grid)?;
        let b2 = self.b_const * self.b_const;
        let slack = T::lit(1e-12) * (T::one() + b2);
        for ((&t, &vt), &wt) in grid.iter().zip(&v).zip(&w) {
            if vt <= T::zero() {
                return Err(Error::HypothesisViolated(format!("v({}) = {} is not positive", t, vt)));
            }
            if wt * vt * vt < -b2 - slack {
                return Err(Error::HypothesisViolated(format!(
                    "W v^2 = {} < -B^2 = {} at t = {}",
                    wt * vt * vt,
                    -b2,
                    t
                )));
            }
        }
        if self.singular_start() {
            if self.v_inv_l1_at_zero == L1Status::Integrable {
                return Err(Error::HypothesisViolated("1/v is integrable at 0+".into()));
            }
            let probe: Vec<T> = [1e-4, 1e-6, 1e-8].iter().map(|&x| T::lit(x)).collect();
            let vals = self.v.sample(&probe)?;
            if !(vals[0] >= vals[1] && vals[1] >= vals[2] && vals[2] < T::lit(1e-3) * (T::one() + vals[0])) {
                return Err(Error::HypothesisViolated("v does not tend to 0 at 0+".into()));
            }
            let w0 = self.w.sample(&probe)?;
            if w0.iter().any(|x| x.abs() > T::lit(1e12)) {
                return Err(Error::HypothesisViolated("W is not locally bounded at 0+".into()));
            }
        }
        Ok(())
    }
}

/// `K_gamma` along a geodesic with its lower bound `K >= -B^2` and the dimension `m`.
#[derive(Clone, Debug)]
pub struct CurvatureProfile<T> {
    pub k: Profile<T>,
    pub b_const: T,
    pub m: u32,
}

impl<T: Real> CurvatureProfile<T> {
    pub fn new(k: Profile<T>, b_const: T, m: u32) -> Self {
        CurvatureProfile { k, b_const, m }
    }

    pub fn sample_grid(&self) -> Vec<T> {
        geometric_grid(T::lit(1e-6), T::lit(1e3), 400)
    }

    /// `K >= -B^2` on the sample grid.
    pub fn check_lower_bound(&self) -> Result<()> {
        let b2 = self.b_const * self.b_const;
        for (&t, &kt) in self.sample_grid().iter().zip(&self.k.sample(&self.sample_grid())?) {
            if kt < -b2 - T::lit(1e-12) * (T::one() + b2) {
                return Err(Error::HypothesisViolated(format!("K({t}) = {kt} < -B^2 = {}", -b2)));
            }
        }
        Ok(())
    }

    /// `K >= 0` on the sample grid.
    pub fn check_nonnegative(&self) -> Result<()> {
        for (&t, &kt) in self.sample_grid().iter().zip(&self.k.sample(&self.sample_grid())?) {
            if kt < T::zero() {
                return Err(Error::HypothesisViolated(format!("K({t}) = {kt} < 0")));
            }
        }
        Ok(())
    }
}

/// `V(t1, t2) = exp(2 B int_{t1}^{t2} ds / v(s))`, with `t2 = inf` allowed.
pub fn big_v<T: Real>(pair: &CoefficientPair<T>, t1: T, t2: T, tol: T) -> Result<T> {
    if pair.b_const == T::zero() || t1 == t2 {
        return Ok(T::one());
    }
    let i = v_inv_integral(pair, t1, t2, tol)?;
    if i.is_infinite() {
        return Ok(T::infinity());
    }
    Ok((T::lit(2.0) * pair.b_const * i).exp())
}

/// `int_{t1}^{t2} ds / v(s)`, with `t2 = inf` allowed.
pub fn v_inv_integral<T: Real>(pair: &CoefficientPair<T>, t1: T, t2: T, tol: T) -> Result<T> {
    if t2.is_infinite() {
        tail_integral(pair.v_inv(), t1, tol)
    } else {
        Ok(integrate(pair.v_inv(), t1, t2, tol)?.value)
    }
}

/// `int_a^b t^lambda K(t) dt`.
pub fn weighted_moment<T: Real>(k: &CurvatureProfile<T>, lambda: T, a: T, b: T, tol: T) -> Result<T> {
    let weighted = if lambda == T::zero() {
        k.k.clone()
    } else {
        Profile::power(T::one(), lambda).product(&k.k)
    };
    Ok(integrate(&weighted, a, b, tol)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-10;

    fn unit_pair(b: f64) -> CoefficientPair<f64> {
        CoefficientPair::new(Profile::constant(1.0), Profile::constant(1.0), b)
    }

    #[test]
    fn integrate_examples() {
        let one = Profile::constant(1.0);
        assert!((integrate(&one, 0.5, 2.5, TOL).unwrap().value - 2.0).abs() < 1e-12);
        let inv_sq = Profile::power(1.0, -2.0);
        assert!((integrate(&inv_sq, 1.0, f64::INFINITY, TOL).unwrap().value - 1.0).abs() < 1e-12);
        let sin = Profile::new("sin", Expr::t().sin());
        assert!((integrate(&sin, 0.0, std::f64::consts::PI, TOL).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tail_integral_examples() {
        assert!((tail_integral(&Profile::power(1.0, -2.0), 2.0, TOL).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(tail_integral(&Profile::power(1.0, -1.0), 1.0, TOL).unwrap(), f64::INFINITY);
        let e = Profile::exponential(1.0, -1.0);
        assert!(matches!(e.tail_class(), TailClass::ClosedForm { .. }));
        assert!((tail_integral(&e, 0.0, TOL).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(tail_integral(&Profile::exponential(2.0, 0.5), 3.0, TOL).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tail_integral_marches_asymptotic_power() {
        // 1/(t^2 + t^4) ~ t^-4, not a closed form: int_1^inf = 1 - pi/4.
        let p = Profile::new("q", (Expr::t().powf(2.0) + Expr::t().powf(4.0)).recip());
        assert_eq!(p.tail_class(), &TailClass::Power { c: 1.0, p: -4.0 });
        let got = tail_integral(&p, 1.0, TOL).unwrap();
        assert!((got - (1.0 - std::f64::consts::FRAC_PI_4)).abs() < 1e-9, "{got}");
    }

    #[test]
    fn tail_integral_marches_exponential() {
        // 1/sinh(t)^2 has int_b^inf = coth(b) - 1.
        let p = Profile::new("csch2", Expr::t().sinh().powf(-2.0));
        assert!(matches!(p.tail_class(), TailClass::Exp { .. }));
        let got = tail_integral(&p, 1.0, TOL).unwrap();
        assert!((got - (1.0 / 1f64.tanh() - 1.0)).abs() < 1e-9, "{got}");
    }

    #[test]
    fn missing_tail_info() {
        let p = Profile::new("osc", Expr::t().sin());
        assert!(matches!(tail_integral(&p, 1.0, TOL), Err(Error::TailInfoMissing(_))));
    }

    #[test]
    fn power_tail_ratio_invariant() {
        let p = Profile::new("q", Expr::lit(2.0) * Expr::t().powf(-1.5) + Expr::t().powf(-2.5));
        let TailClass::ClosedForm { leading: Asymptote::Term(t), .. } = p.tail_class().clone() else {
            panic!("expected closed form");
        };
        for x in [1e3f64, 1e4, 1e5] {
            let ratio = p.eval(x) / (t.c * x.powf(t.p));
            assert!((ratio - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn big_v_examples() {
        let e2 = 1f64.exp().powi(2);
        assert!((big_v(&unit_pair(1.0), 0.5, 1.5, TOL).unwrap() - e2).abs() < 1e-9);
        assert_eq!(big_v(&unit_pair(0.0), 0.5, 7.0, TOL).unwrap(), 1.0);
        let sq = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(0.0), 1.0);
        assert!((big_v(&sq, 1.0, f64::INFINITY, TOL).unwrap() - e2).abs() < 1e-12);
        assert_eq!(big_v(&unit_pair(1.0), 1.0, f64::INFINITY, TOL).unwrap(), f64::INFINITY);
    }

    #[test]
    fn weighted_moment_examples() {
        let one = CurvatureProfile::new(Profile::constant(1.0), 0.0, 2);
        assert!((weighted_moment(&one, 0.0, 1.0, 3.0, TOL).unwrap() - 2.0).abs() < 1e-12);
        assert!((weighted_moment(&one, 1.0, 1.0, 3.0, TOL).unwrap() - 4.0).abs() < 1e-12);
        let inv = CurvatureProfile::new(Profile::power(1.0, -1.0), 0.0, 2);
        let e = std::f64::consts::E;
        assert!((weighted_moment(&inv, 1.0, 1.0, e, TOL).unwrap() - (e - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn admissibility() {
        let ok = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(1.0), 0.0);
        assert!(ok.check_admissible().is_ok());
        assert_eq!(ok.v_inv_l1_at_zero(), L1Status::NotIntegrable);
        assert_eq!(ok.v_inv_l1_at_infinity(), L1Status::Integrable);
        let flat = unit_pair(1.0);
        assert_eq!(flat.v_inv_l1_at_zero(), L1Status::Integrable);
        assert!(flat.check_admissible().is_err());
        let shifted = unit_pair(1.0).with_start(1.0);
        assert!(shifted.check_admissible().is_ok());
        let bad_w = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(-1.0), 0.5);
        assert!(matches!(bad_w.check_admissible(), Err(Error::HypothesisViolated(_))));
    }

    proptest! {
        #[test]
        fn big_v_multiplicative(t1 in 0.1f64..3.0, d1 in 0.01f64..3.0, d2 in 0.01f64..3.0, b in 0.0f64..1.5) {
            let pair = CoefficientPair::new(
                Profile::new("v", Expr::t().powf(2.0) + Expr::t()),
                Profile::constant(0.0),
                b,
            );
            let (t2, t3) = (t1 + d1, t1 + d1 + d2);
            let lhs = big_v(&pair, t1, t2, TOL).unwrap() * big_v(&pair, t2, t3, TOL).unwrap();
            let rhs = big_v(&pair, t1, t3, TOL).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs);
            prop_assert!(big_v(&pair, t1, t3, TOL).unwrap() >= big_v(&pair, t1, t2, TOL).unwrap());
            prop_assert!(big_v(&pair, t2, t3, TOL).unwrap() <= big_v(&pair, t1, t3, TOL).unwrap());
        }

        #[test]
        fn integrate_additive(a in 0.1f64..2.0, d1 in 0.1f64..4.0, d2 in 0.1f64..4.0) {
            let p = Profile::new("p", Expr::t().sin() * Expr::t().powf(1.5) + Expr::t().recip());
            let (b, c) = (a + d1, a + d1 + d2);
            let whole = integrate(&p, a, c, TOL).unwrap().value;
            let parts = integrate(&p, a, b, TOL).unwrap().value + integrate(&p, b, c, TOL).unwrap().value;
            prop_assert!((whole - parts).abs() <= 3.0 * TOL * (1.0 + whole.abs()));
        }
    }
}
