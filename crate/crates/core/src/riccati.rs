//! Riccati transforms of trajectories, the explicit comparison families,
//! their blow-up times, envelope bounds and a grid verifier for the
//! comparison lemma.

use crate::error::{Error, Result};
use crate::ode::Trajectory;
use crate::profiles::{v_inv_integral, CoefficientPair, L1Status};
use crate::report::fmt_g12;
use crate::scalar::{b_coth, Real};
use std::io::{self, Write};

/// Nodes whose `|z|` is below this fraction of `max |z|` are excluded from
/// Riccati checks.
pub const POLE_EXCLUSION: f64 = 1e-10;
/// Denominators below this magnitude are reported as poles.
pub const POLE_DENOMINATOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub enum Flavor<T> {
    /// `h_C = B (C + e^{2Bt}) / (C - e^{2Bt})`, solving `h' = h^2 - B^2`.
    H,
    /// `y_C = B (C + V(1,t)) / (C - V(1,t))`, solving `y' = (y^2 - B^2) / v`.
    Y(CoefficientPair<T>),
}

#[derive(Clone, Debug)]
pub struct ComparisonFamily<T> {
    pub b_const: T,
    pub c_param: T,
    pub flavor: Flavor<T>,
}

impl<T: Real> ComparisonFamily<T> {
    pub fn h(b_const: T, c_param: T) -> Result<Self> {
        Self::checked(ComparisonFamily { b_const, c_param, flavor: Flavor::H })
    }

    pub fn y(pair: &CoefficientPair<T>, c_param: T) -> Result<Self> {
        Self::checked(ComparisonFamily { b_const: pair.b_const, c_param, flavor: Flavor::Y(pair.clone()) })
    }

    fn checked(f: Self) -> Result<Self> {
        if !(f.b_const >= T::zero()) || !(f.c_param > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "comparison family needs B >= 0 and C > 0, got B = {}, C = {}",
                f.b_const, f.c_param
            )));
        }
        Ok(f)
    }

    /// The member of the H family passing through `(t, value)`.
    pub fn h_through(b_const: T, t: T, value: T) -> Result<Self> {
        let c = (value + b_const) / (value - b_const) * (T::lit(2.0) * b_const * t).exp();
        Self::h(b_const, c)
    }

    /// The member of the Y family passing through `(t, value)`.
    pub fn y_through(pair: &CoefficientPair<T>, t: T, value: T, tol: T) -> Result<Self> {
        let b = pair.b_const;
        let v1t = (T::lit(2.0) * b * signed_v_inv_integral(pair, t, tol)?).exp();
        Self::y(pair, (value + b) / (value - b) * v1t)
    }

    /// Whether the family member is one of the H functions used in the
    /// comparison argument (`C >= 1`).
    pub fn admissible(&self) -> bool {
        match self.flavor {
            Flavor::H => self.c_param >= T::one(),
            Flavor::Y(_) => self.c_param > T::zero(),
        }
    }

    /// `B (C + E) / (C - E)` for `E = exp(x)`.
    fn from_exponent(&self, x: T) -> Result<T> {
        let b = self.b_const;
        if b == T::zero() {
            return Ok(T::zero());
        }
        let e = x.exp();
        if e.is_infinite() {
            return Ok(-b);
        }
        let den = self.c_param - e;
        if den.abs() < T::lit(POLE_DENOMINATOR) {
            return Err(Error::AtPole { t: f64::NAN });
        }
        Ok(b * (self.c_param + e) / den)
    }

    /// Flavor Y value from a precomputed `int_1^t 1/v`.
    pub fn value_from_integral(&self, i: T) -> Result<T> {
        self.from_exponent(T::lit(2.0) * self.b_const * i)
    }

    /// Right side of the Riccati equation solved by the family.
    pub fn rhs(&self, t: T, value: T) -> T {
        let q = value * value - self.b_const * self.b_const;
        match &self.flavor {
            Flavor::H => q,
            Flavor::Y(pair) => q / pair.v.eval(t),
        }
    }
}

/// `int_1^t 1/v` with sign.
fn signed_v_inv_integral<T: Real>(pair: &CoefficientPair<T>, t: T, tol: T) -> Result<T> {
    if t >= T::one() {
        v_inv_integral(pair, T::one(), t, tol)
    } else {
        v_inv_integral(pair, t, T::one(), tol).map(|x| -x)
    }
}

/// `h_C(t)` or `y_C(t)`.
pub fn comparison_value<T: Real>(fam: &ComparisonFamily<T>, t: T) -> Result<T> {
    comparison_value_tol(fam, t, T::default_tol())
}

pub fn comparison_value_tol<T: Real>(fam: &ComparisonFamily<T>, t: T, tol: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParams(format!("comparison functions live on t > 0, got {t}")));
    }
    let x = match &fam.flavor {
        Flavor::H => T::lit(2.0) * fam.b_const * t,
        Flavor::Y(pair) => {
            if fam.b_const == T::zero() {
                return Ok(T::zero());
            }
            T::lit(2.0) * fam.b_const * signed_v_inv_integral(pair, t, tol)?
        }
    };
    fam.from_exponent(x).map_err(|e| match e {
        Error::AtPole { .. } => Error::AtPole { t: t.as_f64() },
        other => other,
    })
}

/// Blow-up time of the family member, `+inf` when it is defined on all of `(0, inf)`.
pub fn blow_up_time<T: Real>(fam: &ComparisonFamily<T>, tol: T) -> Result<T> {
    let b = fam.b_const;
    if b == T::zero() {
        return Ok(T::infinity());
    }
    let target = fam.c_param.ln() / (T::lit(2.0) * b);
    match &fam.flavor {
        Flavor::H => Ok(if target > T::zero() { target } else { T::infinity() }),
        Flavor::Y(pair) => {
            if target > T::zero() {
                match pair.v_inv_l1_at_infinity() {
                    L1Status::Integrable => {
                        let total = v_inv_integral(pair, T::one(), T::infinity(), tol)?;
                        if target >= total {
                            return Ok(T::infinity());
                        }
                    }
                    L1Status::NotIntegrable => {}
                    L1Status::Unknown => {
                        return Err(Error::TailInfoMissing(format!(
                            "integrability of 1/({}) at infinity is undeclared",
                            pair.v.name
                        )))
                    }
                }
            }
            solve_cumulative(pair, target, tol)
        }
    }
}

/// Solves `int_1^t 1/v = target` by safeguarded Newton iteration.
fn solve_cumulative<T: Real>(pair: &CoefficientPair<T>, target: T, tol: T) -> Result<T> {
    let f = |t: T| -> Result<T> { Ok(signed_v_inv_integral(pair, t, tol)? - target) };
    let one = T::one();
    // Bracket the root.
    let (mut lo, mut hi) = if target >= T::zero() { (one, T::lit(2.0)) } else { (T::lit(0.5), one) };
    if target >= T::zero() {
        while f(hi)? < T::zero() {
            lo = hi;
            hi = hi * T::lit(2.0);
            if !hi.is_finite() || hi > T::tail_cap() {
                return Ok(T::infinity());
            }
        }
    } else {
        while f(lo)? > T::zero() {
            hi = lo;
            lo = lo * T::lit(0.5);
            if lo < T::min_positive_value() {
                return Err(Error::InvalidParams("blow-up time below representable range".into()));
            }
        }
    }
    let mut t = T::lit(0.5) * (lo + hi);
    for _ in 0..200 {
        let ft = f(t)?;
        if ft == T::zero() {
            return Ok(t);
        }
        if ft < T::zero() {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - ft * pair.v.eval(t);
        let next = if newton > lo && newton < hi { newton } else { T::lit(0.5) * (lo + hi) };
        if (next - t).abs() <= T::epsilon() * T::lit(4.0) * t.abs() || hi - lo <= T::epsilon() * hi {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// Pointwise bounds on `h` or `y` for solutions without zeros.
#[derive(Clone, Debug)]
pub enum EnvelopeKind<T> {
    /// `-B coth(Bt) <= h <= B`.
    Estimate { b: T },
    /// `-B <= y <= B`.
    EstimateW { b: T },
    /// `-B <= y <= B coth(B int_t^inf 1/v)`.
    EstimateWIn { pair: CoefficientPair<T> },
    /// `-B coth(B int_T^t 1/v) <= y <= B`, `t > T`.
    YMinus { pair: CoefficientPair<T>, t_lower: T },
    /// `-B coth(Bt) <= h <= B coth(B (D/2 - t))`, `t < D/2`.
    EstDiam { b: T, diameter: T },
}

/// `(lower, upper)` of the envelope at `t`.
pub fn envelope<T: Real>(kind: &EnvelopeKind<T>, t: T, tol: T) -> Result<(T, T)> {
    let out = |reason: &str| Error::OutOfValidity { t: t.as_f64(), reason: reason.to_string() };
    if !(t > T::zero()) {
        return Err(out("envelopes are stated for t > 0"));
    }
    match kind {
        EnvelopeKind::Estimate { b } => Ok((-b_coth(*b, t), *b)),
        EnvelopeKind::EstimateW { b } => Ok((-*b, *b)),
        EnvelopeKind::EstimateWIn { pair } => {
            let i = v_inv_integral(pair, t, T::infinity(), tol)?;
            Ok((-pair.b_const, b_coth(pair.b_const, i)))
        }
        EnvelopeKind::YMinus { pair, t_lower } => {
            if !(t > *t_lower) {
                return Err(out("the lower Y envelope needs t > T"));
            }
            let i = v_inv_integral(pair, *t_lower, t, tol)?;
            Ok((-b_coth(pair.b_const, i), pair.b_const))
        }
        EnvelopeKind::EstDiam { b, diameter } => {
            let half = T::lit(0.5) * *diameter;
            if !(t < half) {
                return Err(out("the diameter envelope needs t < D/2"));
            }
            Ok((-b_coth(*b, t), b_coth(*b, half - t)))
        }
    }
}

#[derive(Clone, Debug)]
pub enum RiccatiSource<T> {
    Solution(Trajectory<T>),
    Comparison(ComparisonFamily<T>),
    /// Nodes only; values between nodes are linearly interpolated.
    Sampled,
}

#[derive(Clone, Debug)]
pub struct RiccatiTrajectory<T> {
    pub nodes: Vec<(T, T)>,
    pub poles: Vec<T>,
    pub source: RiccatiSource<T>,
}

impl<T: Real> RiccatiTrajectory<T> {
    /// Samples a comparison function on `grid`, recording its pole when it falls in range.
    pub fn from_family(fam: &ComparisonFamily<T>, grid: &[T], tol: T) -> Result<Self> {
        let mut nodes = Vec::with_capacity(grid.len());
        for &t in grid {
            match comparison_value_tol(fam, t, tol) {
                Ok(y) if y.is_finite() => nodes.push((t, y)),
                Ok(_) | Err(Error::AtPole { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let pole = blow_up_time(fam, tol)?;
        let in_range = grid.first().zip(grid.last()).is_some_and(|(&a, &b)| pole >= a && pole <= b);
        let poles = if in_range { vec![pole] } else { Vec::new() };
        Ok(RiccatiTrajectory { nodes, poles, source: RiccatiSource::Comparison(fam.clone()) })
    }

    pub fn sampled(nodes: Vec<(T, T)>, poles: Vec<T>) -> Self {
        RiccatiTrajectory { nodes, poles, source: RiccatiSource::Sampled }
    }

    pub fn t_range(&self) -> Option<(T, T)> {
        Some((self.nodes.first()?.0, self.nodes.last()?.0))
    }

    /// Value at `t`, or `None` outside the domain or at a pole.
    pub fn value_at(&self, t: T) -> Option<T> {
        let y = match &self.source {
            RiccatiSource::Solution(traj) => {
                let s = traj.state_at(t)?;
                -s[1] / s[0]
            }
            RiccatiSource::Comparison(fam) => comparison_value(fam, t).ok()?,
            RiccatiSource::Sampled => {
                let i = self.nodes.partition_point(|n| n.0 < t);
                if i < self.nodes.len() && self.nodes[i].0 == t {
                    self.nodes[i].1
                } else if i == 0 || i == self.nodes.len() {
                    return None;
                } else {
                    let (a, b) = (self.nodes[i - 1], self.nodes[i]);
                    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
                }
            }
        };
        y.is_finite().then_some(y)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# t\ty")?;
        for (t, y) in &self.nodes {
            writeln!(w, "{}\t{}", fmt_g12(t.as_f64()), fmt_g12(y.as_f64()))?;
        }
        for p in &self.poles {
            writeln!(w, "# pole {}", fmt_g12(p.as_f64()))?;
        }
        Ok(())
    }
}

/// `y = -v z' / z` on the trajectory's nodes, with near-pole nodes excluded.
/// For the Jacobi equation this is `h = -u'/u`.
pub fn riccati_from_solution<T: Real>(traj: &Trajectory<T>) -> RiccatiTrajectory<T> {
    let floor = T::lit(POLE_EXCLUSION) * traj.max_abs_value();
    let nodes = traj
        .nodes
        .iter()
        .zip(traj.flux())
        .filter(|(n, _)| n.z.abs() > floor)
        .map(|(n, &q)| (n.t, -q / n.z))
        .collect();
    let poles = traj.zeros.iter().map(|z| z.midpoint()).collect();
    RiccatiTrajectory { nodes, poles, source: RiccatiSource::Solution(traj.clone()) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport<T> {
    pub holds: bool,
    /// First node `(t, q1, q2)` where the ordering fails.
    pub first_violation: Option<(T, T, T)>,
    pub nodes_checked: usize,
    /// Pole of `q1` nearest to `t_bar` in the checked direction.
    pub pole_q1: Option<T>,
    pub pole_q2: Option<T>,
    /// `T1 <= T2` forward (resp. `T1 >= T2` backward), vacuous when `q1` has no pole.
    pub poles_ordered: bool,
}

/// Checks the conclusion of the Riccati comparison lemma on the union of the
/// two node grids: forward `q1 >= q2` on `[t_bar, T1)`, backward `q1 <= q2` on `(T1, t_bar]`.
pub fn verify_comparison<T: Real>(
    q1: &RiccatiTrajectory<T>,
    q2: &RiccatiTrajectory<T>,
    t_bar: T,
    direction: Direction,
    tol: T,
) -> Result<ComparisonReport<T>> {
    let a1 = q1.value_at(t_bar);
    let a2 = q2.value_at(t_bar);
    let (Some(a1), Some(a2)) = (a1, a2) else {
        return Err(Error::MismatchedAnchor {
            t: t_bar.as_f64(),
            q1: a1.map_or(f64::NAN, |x| x.as_f64()),
            q2: a2.map_or(f64::NAN, |x| x.as_f64()),
        });
    };
    if (a1 - a2).abs() > T::lit(1e-8) * (T::one() + a2.abs()) {
        return Err(Error::MismatchedAnchor { t: t_bar.as_f64(), q1: a1.as_f64(), q2: a2.as_f64() });
    }
    let forward = direction == Direction::Forward;
    let nearest_pole = |poles: &[T]| -> Option<T> {
        if forward {
            poles.iter().copied().filter(|&p| p > t_bar).fold(None, |m: Option<T>, p| Some(m.map_or(p, |m| m.min(p))))
        } else {
            poles.iter().copied().filter(|&p| p < t_bar).fold(None, |m: Option<T>, p| Some(m.map_or(p, |m| m.max(p))))
        }
    };
    let pole_q1 = nearest_pole(&q1.poles);
    let pole_q2 = nearest_pole(&q2.poles);
    let limit = match (pole_q1, pole_q2) {
        (Some(a), Some(b)) => Some(if forward { a.min(b) } else { a.max(b) }),
        (a, b) => a.or(b),
    };
    let mut grid: Vec<T> = q1.nodes.iter().chain(&q2.nodes).map(|n| n.0).collect();
    grid.push(t_bar);
    grid.retain(|&t| {
        let side = if forward { t >= t_bar } else { t <= t_bar };
        let before_pole = limit.map_or(true, |p| if forward { t < p } else { t > p });
        side && before_pole
    });
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite abscissae"));
    grid.dedup();
    if !forward {
        grid.reverse();
    }
    let mut checked = 0;
    let mut first_violation = None;
    for &t in &grid {
        let (Some(y1), Some(y2)) = (q1.value_at(t), q2.value_at(t)) else { continue };
        checked += 1;
        let slack = T::lit(1e-6) * (T::one() + y2.abs()).max(tol);
        let ok = if forward { y1 >= y2 - slack } else { y1 <= y2 + slack };
        if !ok {
            first_violation = Some((t, y1, y2));
            break;
        }
    }
    let poles_ordered = match (pole_q1, pole_q2) {
        (None, _) => true,
        (Some(_), None) => true,
        (Some(a), Some(b)) => {
            let slack = T::lit(1e-6) * (T::one() + b.abs());
            if forward { a <= b + slack } else { a >= b - slack }
        }
    };
    Ok(ComparisonReport {
        holds: first_violation.is_none() && poles_ordered,
        first_violation,
        nodes_checked: checked,
        pole_q1,
        pole_q2,
        poles_ordered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::ode::{solve_jacobi, SolveOptions};
    use crate::profiles::{linear_grid, CurvatureProfile, Profile};
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    const TOL: f64 = 1e-10;

    fn ratio_e2() -> f64 {
        (E * E + 1.0) / (E * E - 1.0)
    }

    fn jacobi(k: Profile<f64>, b: f64, horizon: f64) -> Trajectory<f64> {
        solve_jacobi(&CurvatureProfile::new(k, b, 3), horizon, TOL).unwrap()
    }

    fn unit_pair(b: f64) -> CoefficientPair<f64> {
        CoefficientPair::new(Profile::constant(1.0), Profile::constant(0.0), b).with_start(1.0)
    }

    #[test]
    fn comparison_value_examples() {
        let fam = ComparisonFamily::h(1.0, E.powi(4)).unwrap();
        let want = (E.powi(4) + E * E) / (E.powi(4) - E * E);
        assert!((comparison_value(&fam, 1.0).unwrap() - want).abs() < 1e-12);
        assert!((want - 1.313035).abs() < 1e-6);
        let big = ComparisonFamily::h(1.0f64, 1e12).unwrap();
        let huge = ComparisonFamily::h(1.0, 1e15).unwrap();
        // As C grows at fixed t the value approaches +B from above, and the
        // post-pole branch approaches -B.
        assert!(comparison_value(&huge, 1.0).unwrap() - 1.0 < comparison_value(&big, 1.0).unwrap() - 1.0);
        assert!((comparison_value(&big, 30.0).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(comparison_value(&ComparisonFamily::h(0.0, 3.0).unwrap(), 2.0).unwrap(), 0.0);
        let y = ComparisonFamily::y(&unit_pair(1.0), E * E).unwrap();
        assert!((comparison_value(&y, 1.0).unwrap() - ratio_e2()).abs() < 1e-12);
    }

    #[test]
    fn comparison_value_at_pole() {
        let fam = ComparisonFamily::h(1.0, E * E).unwrap();
        assert!(matches!(comparison_value(&fam, 1.0), Err(Error::AtPole { .. })));
    }

    #[test]
    fn blow_up_examples() {
        let h = ComparisonFamily::h(1.0, E * E).unwrap();
        assert!((blow_up_time(&h, TOL).unwrap() - 1.0).abs() < 1e-15);
        let y = ComparisonFamily::y(&unit_pair(1.0), E * E).unwrap();
        assert!((blow_up_time(&y, TOL).unwrap() - 2.0).abs() < 1e-10);
        let sq = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(0.0), 1.0);
        let y = ComparisonFamily::y(&sq, E.powi(4)).unwrap();
        assert_eq!(blow_up_time(&y, TOL).unwrap(), f64::INFINITY);
        // Below V(1, inf) = e^2 the pole is finite: int_1^t s^-2 = 1 - 1/t = 1/2.
        let y = ComparisonFamily::y(&sq, E).unwrap();
        assert!((blow_up_time(&y, TOL).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn blow_up_needs_tail_info() {
        let v = Profile::new("osc", Expr::lit(2.0) + Expr::t().sin());
        let pair = CoefficientPair::new(v, Profile::constant(0.0), 1.0);
        let y = ComparisonFamily::y(&pair, 3.0).unwrap();
        assert!(matches!(blow_up_time(&y, TOL), Err(Error::TailInfoMissing(_))));
    }

    #[test]
    fn envelope_examples() {
        let (lo, hi) = envelope(&EnvelopeKind::Estimate { b: 1.0 }, 1.0, TOL).unwrap();
        assert!((lo + ratio_e2()).abs() < 1e-12 && hi == 1.0);
        assert_eq!(envelope(&EnvelopeKind::EstimateW { b: 2.0 }, 7.0, TOL).unwrap(), (-2.0, 2.0));
        let (_, hi) = envelope(&EnvelopeKind::EstDiam { b: 1.0, diameter: 4.0 }, 1.0, TOL).unwrap();
        assert!((hi - ratio_e2()).abs() < 1e-12);
        let (lo, hi) = envelope(&EnvelopeKind::Estimate { b: 0.0 }, 4.0, TOL).unwrap();
        assert_eq!((lo, hi), (-0.25, 0.0));
        assert!(matches!(
            envelope(&EnvelopeKind::EstDiam { b: 1.0, diameter: 4.0 }, 2.5, TOL),
            Err(Error::OutOfValidity { .. })
        ));
        let sq = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(0.0), 1.0);
        let (lo, hi) = envelope(&EnvelopeKind::EstimateWIn { pair: sq.clone() }, 1.0, TOL).unwrap();
        assert!((lo + 1.0).abs() < 1e-15 && (hi - ratio_e2()).abs() < 1e-9);
        let (lo, hi) = envelope(&EnvelopeKind::YMinus { pair: unit_pair(1.0), t_lower: 1.0 }, 1.5, TOL).unwrap();
        let want = (E + 1.0) / (E - 1.0);
        assert!((lo + want).abs() < 1e-9 && hi == 1.0);
        assert!(envelope(&EnvelopeKind::YMinus { pair: sq, t_lower: 2.0 }, 1.0, TOL).is_err());
    }

    #[test]
    fn riccati_of_closed_forms() {
        let sin = riccati_from_solution(&jacobi(Profile::constant(1.0), 0.0, 4.0));
        assert_eq!(sin.poles.len(), 1);
        assert!((sin.poles[0] - PI).abs() < 1e-6);
        for &(t, h) in sin.nodes.iter().filter(|n| n.0 > 0.05 && (n.0 - PI).abs() > 0.05) {
            assert!((h + 1.0 / t.tan()).abs() < 1e-6 * (1.0 + h.abs()), "t = {t}");
        }
        let lin = riccati_from_solution(&jacobi(Profile::constant(0.0), 0.0, 10.0));
        for &(t, h) in &lin.nodes {
            assert!((h + 1.0 / t).abs() < 1e-8 * (1.0 + h.abs()));
        }
        let sinh = riccati_from_solution(&jacobi(Profile::constant(-1.0), 1.0, 20.0));
        assert!(sinh.poles.is_empty());
        for &(t, h) in sinh.nodes.iter().filter(|n| n.0 > 0.01) {
            assert!((h + 1.0 / t.tanh()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn comparison_with_sphere_holds_forward() {
        let h = riccati_from_solution(&jacobi(Profile::constant(1.0), 1.0, 4.0));
        let t_bar = 0.5;
        let fam = ComparisonFamily::h_through(1.0, t_bar, h.value_at(t_bar).unwrap()).unwrap();
        let q2 = RiccatiTrajectory::from_family(&fam, &linear_grid(0.01, 4.0, 400), TOL).unwrap();
        let rep = verify_comparison(&h, &q2, t_bar, Direction::Forward, TOL).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rep.nodes_checked > 100);
        assert!((rep.pole_q1.unwrap() - PI).abs() < 1e-6);
    }

    #[test]
    fn comparison_with_itself_and_at_saturation() {
        let h = riccati_from_solution(&jacobi(Profile::constant(-1.0), 1.0, 10.0));
        let rep = verify_comparison(&h, &h, 2.0, Direction::Forward, TOL).unwrap();
        assert!(rep.holds && rep.first_violation.is_none());
        let fam = ComparisonFamily::h_through(1.0, 2.0, h.value_at(2.0).unwrap()).unwrap();
        let q2 = RiccatiTrajectory::from_family(&fam, &linear_grid(0.1, 10.0, 200), TOL).unwrap();
        for dir in [Direction::Forward, Direction::Backward] {
            assert!(verify_comparison(&h, &q2, 2.0, dir, TOL).unwrap().holds);
        }
        for &(t, y) in &q2.nodes {
            assert!((y - h.value_at(t).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn comparison_detects_violation_and_anchor() {
        let above = RiccatiTrajectory::sampled(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], vec![]);
        let below = RiccatiTrajectory::sampled(vec![(0.0, 0.0), (1.0, -1.0), (2.0, -2.0)], vec![]);
        let rep = verify_comparison(&below, &above, 0.0, Direction::Forward, TOL).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.first_violation.unwrap().0, 1.0);
        assert!(matches!(
            verify_comparison(&below, &above, 1.0, Direction::Forward, TOL),
            Err(Error::MismatchedAnchor { .. })
        ));
    }

    #[test]
    fn envelope_saturated_by_hyperbolic_case() {
        for b in [0.5, 1.0, 2.0] {
            let k = CurvatureProfile::new(Profile::constant(-b * b), b, 3);
            let tr = crate::ode::solve_jacobi_with(&k, 8.0, &SolveOptions::new(1e-13)).unwrap();
            let h = riccati_from_solution(&tr);
            for &(t, y) in h.nodes.iter().filter(|n| n.0 >= 0.01) {
                let (lo, _) = envelope(&EnvelopeKind::Estimate { b }, t, TOL).unwrap();
                assert!((y - lo).abs() < 1e-8, "b = {b}, t = {t}: {y} vs {lo}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn h_family_residual(b in 0.1f64..2.0, c in 1.0f64..50.0, t in 0.05f64..5.0) {
            let fam = ComparisonFamily::h(b, c).unwrap();
            let pole = blow_up_time(&fam, TOL).unwrap();
            let step = 1e-5;
            prop_assume!((t - pole).abs() > 0.05);
            let y = comparison_value(&fam, t).unwrap();
            let d = (comparison_value(&fam, t + step).unwrap() - comparison_value(&fam, t - step).unwrap()) / (2.0 * step);
            prop_assert!((d - fam.rhs(t, y)).abs() <= 1e-6 * (1.0 + y * y));
        }

        #[test]
        fn y_family_residual(b in 0.1f64..1.5, c in 0.2f64..20.0, t in 0.3f64..6.0, p in 1.0f64..3.0) {
            let v = Profile::new("v", Expr::t().powf(p) + Expr::t());
            let pair = CoefficientPair::new(v.clone(), Profile::constant(0.0), b);
            let fam = ComparisonFamily::y(&pair, c).unwrap();
            let step = 1e-5;
            let i = signed_v_inv_integral(&pair, t, TOL).unwrap();
            let di = |a: f64, z: f64| crate::profiles::integrate(pair.v_inv(), a, z, TOL).unwrap().value;
            let (yp, ym) = (fam.value_from_integral(i + di(t, t + step)), fam.value_from_integral(i - di(t - step, t)));
            let y = fam.value_from_integral(i);
            prop_assume!(yp.is_ok() && ym.is_ok() && y.is_ok());
            let (y, yp, ym) = (y.unwrap(), yp.unwrap(), ym.unwrap());
            prop_assume!(y.abs() < 1e3 && yp.abs() < 1e3 && ym.abs() < 1e3 && (yp - ym).abs() < 1.0);
            let d = (yp - ym) / (2.0 * step);
            prop_assert!((d - fam.rhs(t, y)).abs() <= 1e-6 * (1.0 + y * y));
        }

        #[test]
        fn poles_increase_with_c(b in 0.1f64..3.0, c in 1.01f64..100.0, dc in 0.01f64..10.0) {
            let t1 = blow_up_time(&ComparisonFamily::h(b, c).unwrap(), TOL).unwrap();
            let t2 = blow_up_time(&ComparisonFamily::h(b, c + dc).unwrap(), TOL).unwrap();
            prop_assert!(t2 > t1);
        }

        #[test]
        fn estimate_envelope_is_sound(b in 0.2f64..2.0, s in 0.0f64..1.0, kind in 0usize..3) {
            // K in [-B^2, 0]: no conjugate points, so h stays in the envelope.
            let g = match kind {
                0 => (-Expr::t()).exp(),
                1 => (Expr::lit(1.0) + Expr::t()).recip(),
                _ => (Expr::lit(1.0) + Expr::t().powf(2.0)).recip(),
            };
            let k = Profile::new("k", Expr::lit(-b * b) * (Expr::lit(1.0) - Expr::lit(s) * g));
            let tr = jacobi(k, b, 15.0);
            prop_assert!(tr.zeros.is_empty());
            let h = riccati_from_solution(&tr);
            for &(t, y) in h.nodes.iter().filter(|n| n.0 > 0.0) {
                let (lo, hi) = envelope(&EnvelopeKind::Estimate { b }, t, TOL).unwrap();
                prop_assert!(y >= lo - 1e-6 * (1.0 + lo.abs()) && y <= hi + 1e-6, "t = {}: {} not in [{}, {}]", t, y, lo, hi);
            }
        }
    }
}
