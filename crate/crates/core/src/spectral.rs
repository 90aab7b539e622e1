//! Spectral consequences of the radial comparison theory: Rayleigh quotients
//! of radial test functions, negativity of the bottom of the spectrum,
//! instability at infinity, index evidence and a Yamabe-type criterion.
//!
//! Manifold data enters only radially: `W` is the spherical mean of the
//! potential and `v(r) = Vol(dB_r)`.

use crate::criteria::{check_first_zero, check_oscillation, first_zero_threshold, Conclusion, CriterionId, Status, Verdict};
use crate::error::{Error, Result};
use crate::ode::{solve_radial_with, SolveOptions, Start, Trajectory};
use crate::profiles::{integrate, CoefficientPair, Profile};
use crate::quadrature::{integrate_fn, QuadOptions};
use crate::report::{fmt_g12, json_number};
use crate::scalar::Real;
use serde_json::{json, Value};
use std::io::{self, Write};

/// Tolerance of the Rayleigh identity relative to `1 + denominator`.
pub const RAYLEIGH_TOLERANCE: f64 = 1e-6;

/// Rayleigh quotient `[int v phi'^2 - int W v phi^2] / int v phi^2` of the
/// test function equal to `z` up to its certified zero at `t2` and `0` beyond.
///
/// With `z` a solution vanishing at `t2` the numerator integrates by parts to
/// the boundary term at the start, which is zero for the singular origin and
/// for regular data with `z'(t0) = 0`. The returned value therefore measures
/// discretization error. `t3 > t2` only fixes the support of the test domain.
pub fn rayleigh_quotient<T: Real>(pair: &CoefficientPair<T>, traj: &Trajectory<T>, t2: T, t3: T) -> Result<T> {
    let (num, den) = rayleigh_parts(pair, traj, t2, t3)?;
    Ok(num / den)
}

/// Numerator and denominator of [`rayleigh_quotient`].
pub fn rayleigh_parts<T: Real>(pair: &CoefficientPair<T>, traj: &Trajectory<T>, t2: T, t3: T) -> Result<(T, T)> {
    if !(t3 > t2) {
        return Err(Error::InvalidParams(format!("need t3 > t2, got t2 = {t2}, t3 = {t3}")));
    }
    let slack = traj.tol.max(T::lit(1e-9)) * (T::one() + t2.abs());
    let zero = traj
        .zeros
        .iter()
        .find(|z| z.t_lo - slack <= t2 && t2 <= z.t_hi + slack)
        .ok_or(Error::NoZeroAtT2 { t2: t2.as_f64() })?;
    let end = zero.midpoint();
    let opts = QuadOptions::relative(T::lit(1e-10));
    let (mut num, mut den) = (T::zero(), T::zero());
    if let Start::Singular { epsilon, z0, .. } = traj.start {
        // z is constant to within the Picard tolerance on [0, eps].
        let z2 = z0 * z0;
        num = num - z2 * integrate_fn(|s| pair.wv().eval(s), T::zero(), epsilon, &opts)?.value;
        den = den + z2 * integrate(&pair.v, T::zero(), epsilon, T::lit(1e-12))?.value;
    }
    let mut knots: Vec<T> = traj.nodes.iter().map(|n| n.t).filter(|&t| t < end).collect();
    knots.push(end);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let kinetic = integrate_fn(
            |s| {
                let q = traj.flux_at(s).unwrap_or(T::nan());
                q * q / traj.v(s)
            },
            a,
            b,
            &opts,
        )?;
        let potential = integrate_fn(
            |s| {
                let z = traj.value_at(s).unwrap_or(T::nan());
                traj.wv(s) * z * z
            },
            a,
            b,
            &opts,
        )?;
        let mass = integrate_fn(
            |s| {
                let z = traj.value_at(s).unwrap_or(T::nan());
                traj.v(s) * z * z
            },
            a,
            b,
            &opts,
        )?;
        num = num + kinetic.value - potential.value;
        den = den + mass.value;
    }
    Ok((num, den))
}

/// Negativity of the bottom of the spectrum of `Delta + w` from the
/// first-zero thresholds applied to `int_a^b W v`.
pub fn lambda1_negative<T: Real>(pair: &CoefficientPair<T>, a: T, b: T, tol: T) -> Result<Verdict> {
    if !(a > T::zero()) {
        return Err(Error::InvalidParams(format!("need a > 0, got {a}")));
    }
    Ok(check_first_zero(pair, a, b, tol)?
        .relabel(CriterionId::Lambda1Negative, &[Conclusion::NegativeBottomSpectrum]))
}

/// Instability at infinity from the oscillation criterion. Satisfied
/// instances give `lambda_1(M \ B_R) < 0` for every `R` and infinite index.
pub fn instability_at_infinity<T: Real>(pair: &CoefficientPair<T>, r: T, horizon: T, tol: T) -> Result<Verdict> {
    let mut v = check_oscillation(pair, r, horizon, tol)?
        .relabel(CriterionId::InstabilityAtInfinity, &[Conclusion::UnstableAtInfinity]);
    if v.is_satisfied() {
        v.note("infinite index");
    }
    Ok(v)
}

/// Radii `R` whose exterior carries a nodal interval of the numerical
/// solution, i.e. two certified zeros beyond `R`.
pub fn unstable_radii<T: Real>(traj: &Trajectory<T>, radii: &[T]) -> Vec<T> {
    radii
        .iter()
        .copied()
        .filter(|&r| traj.zeros.iter().filter(|z| z.t_lo > r).count() >= 2)
        .collect()
}

/// Nodal intervals `[0, t1], [t1, t2], ...` found up to `horizon`, minus one.
pub fn index_lower_bound<T: Real>(pair: &CoefficientPair<T>, horizon: T, tol: T) -> Result<usize> {
    let traj = solve_radial_with(pair, T::one(), horizon, &SolveOptions::new(tol))?;
    Ok(index_from_trajectory(&traj))
}

pub fn index_from_trajectory<T: Real>(traj: &Trajectory<T>) -> usize {
    traj.zeros.len().saturating_sub(1)
}

/// `c_m = 4 (m - 1) / (m - 2)`.
pub fn yamabe_constant<T: Real>(m: u32) -> Result<T> {
    if m < 3 {
        return Err(Error::InvalidParams(format!("dimension must be at least 3, got {m}")));
    }
    Ok(T::lit(4.0 * (m - 1) as f64 / (m - 2) as f64))
}

/// Conformal deformation criterion: `int_a^b (-S) v` against `c_m` times the
/// first-zero threshold, with `S` the spherical mean of the scalar curvature.
/// The side condition on `lambda_1(K_0)` is the caller's responsibility.
#[allow(clippy::too_many_arguments)]
pub fn check_yamabe<T: Real>(
    s_mean: &Profile<T>,
    m: u32,
    v: &Profile<T>,
    b_const: T,
    a: T,
    b: T,
    tol: T,
) -> Result<Verdict> {
    let cm = yamabe_constant::<T>(m)?;
    if !(b_const > T::zero()) {
        return Err(Error::InvalidParams(format!("B must be positive, got {b_const}")));
    }
    if !(a > T::zero() && b > a) {
        return Err(Error::InvalidParams(format!("need 0 < a < b, got a = {a}, b = {b}")));
    }
    let w = s_mean.scaled(-T::one() / cm);
    let pair = CoefficientPair::new(v.clone(), w, b_const);
    let b2 = b_const * b_const;
    for &t in &pair.sample_grid() {
        let bound = cm * b2 / v.eval(t);
        let s = s_mean.eval(t);
        if !s.is_finite() {
            return Err(Error::NonFiniteSample { t: t.as_f64(), value: s.as_f64() });
        }
        if s > bound + T::lit(1e-12) * (T::one() + bound.abs()) {
            return Err(Error::HypothesisViolated(format!("S({t}) = {s} exceeds c_m B^2 / v = {bound}")));
        }
    }
    let neg_sv = Profile::new(format!("-({})*({})", s_mean.name, v.name), -(s_mean.expr().clone() * v.expr().clone()));
    let lhs = integrate(&neg_sv, a, b, tol)?.value;
    let (threshold, tail) = first_zero_threshold(&pair, b, tol)?;
    let rhs = cm * threshold;
    let mut out = Verdict::new(CriterionId::Yamabe)
        .with("c_m", cm)
        .with("a", a)
        .with("b", b)
        .with("B", b_const)
        .with("lhs", lhs)
        .with("rhs", rhs);
    if let Some(i) = tail {
        out.set("v_inv_tail", i);
    }
    out.note("lambda_1 of the zero set of k assumed positive, not checked");
    if crate::criteria::exceeds(lhs, rhs, tol) {
        out.satisfy(&[Conclusion::ConformalDeformation]);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lambda1Sign {
    CertifiedNegative,
    Unknown,
}

impl Lambda1Sign {
    pub fn as_str(&self) -> &'static str {
        match self {
            Lambda1Sign::CertifiedNegative => "CertifiedNegative",
            Lambda1Sign::Unknown => "Unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport<T> {
    pub lambda1_sign: Lambda1Sign,
    pub unstable_radii: Vec<T>,
    pub index_lower_bound: usize,
    pub rayleigh_values: Vec<(T, T)>,
}

impl<T: Real> SpectralReport<T> {
    /// Solves the radial problem to `horizon` and collects the spectral evidence.
    /// A certified zero `t1` already gives `lambda_1(B_{t1}) = 0`, hence
    /// `lambda_1(M) < 0` by strict domain monotonicity.
    pub fn build(pair: &CoefficientPair<T>, radii: &[T], horizon: T, tol: T) -> Result<Self> {
        let traj = solve_radial_with(pair, T::one(), horizon, &SolveOptions::new(tol))?;
        let mut rayleigh_values = Vec::with_capacity(traj.zeros.len());
        for z in &traj.zeros {
            let t2 = z.midpoint();
            rayleigh_values.push((t2, rayleigh_quotient(pair, &traj, t2, t2 + T::one())?));
        }
        Ok(SpectralReport {
            lambda1_sign: if traj.zeros.is_empty() { Lambda1Sign::Unknown } else { Lambda1Sign::CertifiedNegative },
            unstable_radii: unstable_radii(&traj, radii),
            index_lower_bound: index_from_trajectory(&traj),
            rayleigh_values,
        })
    }

    /// Upgrades the sign from a satisfied threshold verdict.
    pub fn absorb(&mut self, verdict: &Verdict) {
        if verdict.criterion == CriterionId::Lambda1Negative && verdict.status == Status::Satisfied {
            self.lambda1_sign = Lambda1Sign::CertifiedNegative;
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lambda1_sign": self.lambda1_sign.as_str(),
            "unstable_radii": self.unstable_radii.iter().map(|r| json_number(r.as_f64())).collect::<Vec<_>>(),
            "index_lower_bound": self.index_lower_bound,
            "rayleigh_values": self
                .rayleigh_values
                .iter()
                .map(|(t, q)| json!([json_number(t.as_f64()), json_number(q.as_f64())]))
                .collect::<Vec<_>>(),
        })
    }

    pub fn write_rayleigh_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# t2\tquotient")?;
        for (t, q) in &self.rayleigh_values {
            writeln!(w, "{}\t{}", fmt_g12(t.as_f64()), fmt_g12(q.as_f64()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::solve_radial;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const TOL: f64 = 1e-10;

    fn euclid3(w: f64) -> CoefficientPair<f64> {
        CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(w), 0.0)
    }

    fn euler(mu: f64) -> CoefficientPair<f64> {
        CoefficientPair::new(Profile::constant(1.0), Profile::power(mu, -2.0), 0.0).with_start(1.0)
    }

    fn assert_identity(pair: &CoefficientPair<f64>, traj: &Trajectory<f64>, t2: f64) {
        let (num, den) = rayleigh_parts(pair, traj, t2, t2 + 1.0).unwrap();
        assert!((num / den).abs() <= RAYLEIGH_TOLERANCE * (1.0 + den), "quotient {} at t2 = {t2}", num / den);
    }

    #[test]
    fn rayleigh_sinc() {
        let p = euclid3(1.0);
        let traj = solve_radial(&p, 1.0, 4.0, TOL).unwrap();
        let t2 = traj.zeros[0].midpoint();
        assert!((t2 - PI).abs() < 1e-8);
        let (num, den) = rayleigh_parts(&p, &traj, t2, 4.0).unwrap();
        // int_0^pi t^2 (sin t / t)^2 = pi / 2
        assert!((den - PI / 2.0).abs() < 1e-7);
        assert!((num / den).abs() < 1e-6);
    }

    #[test]
    fn rayleigh_needs_a_zero() {
        let p = euclid3(0.0);
        let traj = solve_radial(&p, 1.0, 10.0, TOL).unwrap();
        assert!(matches!(rayleigh_quotient(&p, &traj, 3.0, 4.0), Err(Error::NoZeroAtT2 { .. })));
    }

    #[test]
    fn rayleigh_euler() {
        let p = euler(2.0);
        let traj = solve_radial(&p, 1.0, 1e3, TOL).unwrap();
        for z in &traj.zeros {
            assert_identity(&p, &traj, z.midpoint());
        }
    }

    #[test]
    fn lambda1_examples() {
        let flat = CoefficientPair::new(Profile::constant(1.0), Profile::constant(1.0), 1.0);
        let v = lambda1_negative(&flat, 1.0, 4.0, TOL).unwrap();
        assert_eq!(v.status, Status::Satisfied);
        assert_eq!(v.conclusion, vec![Conclusion::NegativeBottomSpectrum]);
        assert!((v.get("lhs").unwrap() - 3.0).abs() < 1e-12);
        let l1 = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(1.0), 0.0);
        let v = lambda1_negative(&l1, 1.0, 2.0, TOL).unwrap();
        assert!((v.get("rhs").unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(lambda1_negative(&euclid3(0.0), 1.0, 2.0, TOL).unwrap().status, Status::Inconclusive);
    }

    #[test]
    fn instability_examples() {
        let osc = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::power(2.0, -2.0), 0.0).with_start(1.0);
        let v = instability_at_infinity(&osc, 1.0, 1e3, TOL).unwrap();
        assert_eq!(v.status, Status::Satisfied);
        assert_eq!(v.conclusion, vec![Conclusion::UnstableAtInfinity]);
        let report = SpectralReport::build(&osc, &[1.0, 10.0, 100.0], 1e5, TOL).unwrap();
        assert_eq!(report.unstable_radii, vec![1.0, 10.0, 100.0]);
        let quiet = CoefficientPair::new(Profile::power(1.0, 2.0), Profile::power(2.0, -4.0), 0.0).with_start(1.0);
        assert_eq!(instability_at_infinity(&quiet, 1.0, 1e3, TOL).unwrap().status, Status::Inconclusive);
        let flat = CoefficientPair::new(Profile::constant(1.0), Profile::constant(1.0), 1.0);
        assert_eq!(instability_at_infinity(&flat, 1.0, 1e2, TOL).unwrap().status, Status::Satisfied);
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_lower_bound(&euclid3(1.0), 10.0, TOL).unwrap(), 2);
        assert_eq!(index_lower_bound(&euclid3(0.0), 100.0, TOL).unwrap(), 0);
        // mu = 0.3 has a single zero before 1e4.
        assert_eq!(index_lower_bound(&euler(0.3), 1e4, TOL).unwrap(), 0);
        assert!(index_lower_bound(&euler(0.3), 1e14, TOL).unwrap() >= 2);
    }

    #[test]
    fn yamabe_constants() {
        assert_eq!(yamabe_constant::<f64>(3).unwrap(), 8.0);
        assert_eq!(yamabe_constant::<f64>(4).unwrap(), 6.0);
        assert!(yamabe_constant::<f64>(2).is_err());
    }

    #[test]
    fn yamabe_examples() {
        let v = Profile::power(4.0 * PI, 2.0);
        let s0 = Profile::constant(0.0);
        let out = check_yamabe(&s0, 3, &v, 1.0, 1.0, 2.0, TOL).unwrap();
        assert_eq!(out.status, Status::Inconclusive);
        assert!(out.get("rhs").unwrap() > 0.0);
        let neg = Profile::constant(-1.0);
        let out = check_yamabe(&neg, 3, &v, 0.5, 1.0, 10.0, TOL).unwrap();
        assert_eq!(out.status, Status::Satisfied);
        assert_eq!(out.conclusion, vec![Conclusion::ConformalDeformation]);
        let pos = Profile::constant(1.0);
        assert!(matches!(check_yamabe(&pos, 3, &v, 0.1, 1.0, 3.0, TOL), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn report_serializes() {
        let report = SpectralReport::build(&euclid3(1.0), &[1.0], 10.0, TOL).unwrap();
        let j = report.to_json();
        assert_eq!(j["lambda1_sign"], "CertifiedNegative");
        assert_eq!(j["index_lower_bound"], 2);
        assert_eq!(report.rayleigh_values.len(), 3);
        let mut buf = Vec::new();
        report.write_rayleigh_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn rayleigh_identity(alpha in 0.5f64..5.0, p in 1.0f64..3.0) {
            let pair = CoefficientPair::new(Profile::power(1.0, p), Profile::constant(alpha), 0.0);
            let traj = solve_radial(&pair, 1.0, 30.0, TOL).unwrap();
            for z in traj.zeros.iter().take(3) {
                let (num, den) = rayleigh_parts(&pair, &traj, z.midpoint(), z.midpoint() + 1.0).unwrap();
                prop_assert!((num / den).abs() <= RAYLEIGH_TOLERANCE * (1.0 + den));
            }
        }

        #[test]
        fn index_monotone_in_horizon(alpha in 0.2f64..4.0, h in 2.0f64..30.0, extra in 0.0f64..30.0) {
            let pair = euclid3(alpha);
            prop_assert!(index_lower_bound(&pair, h, TOL).unwrap() <= index_lower_bound(&pair, h + extra, TOL).unwrap());
        }

        #[test]
        fn delegation_coherence(alpha in -0.5f64..3.0, a in 0.1f64..2.0, d in 0.1f64..5.0, b_const in 0.0f64..2.0) {
            let pair = CoefficientPair::new(Profile::constant(1.0), Profile::constant(alpha), b_const.max(alpha.min(0.0).abs().sqrt()));
            let l = lambda1_negative(&pair, a, a + d, TOL).unwrap();
            let f = check_first_zero(&pair, a, a + d, TOL).unwrap();
            prop_assert_eq!(l.status, f.status);
        }
    }
}
