//! Rotationally symmetric models `dr^2 + f(r)^2 g_{S^{m-1}}` and the radial
//! data they induce: `K = -f''/f` along radial geodesics and
//! `v = omega_{m-1} f^{m-1}`.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::ode::{solve_jacobi_with, SolveOptions};
use crate::profiles::{CoefficientPair, CurvatureProfile, Profile};
use crate::scalar::Real;

/// Area of the unit `n`-sphere.
pub fn sphere_area<T: Real>(n: u32) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let (mut even, mut odd) = (T::lit(2.0), two_pi);
    if n == 0 {
        return even;
    }
    for k in 2..=n {
        let next = two_pi / T::lit((k - 1) as f64);
        if k % 2 == 0 {
            even = next * even;
        } else {
            odd = next * odd;
        }
    }
    if n % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Warping functions with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub enum WarpingKind<T> {
    /// `sin(sqrt(kappa) r) / sqrt(kappa)`, `kappa > 0`.
    Spherical { kappa: T },
    /// `r`.
    Flat,
    /// `sinh(sqrt(-kappa) r) / sqrt(-kappa)`, `kappa < 0`.
    Hyperbolic { kappa: T },
    /// `r + a r^3`.
    Cubic { a: T },
    /// User-supplied `f` with `f'`, `f''`.
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Warping<T> {
    pub kind: WarpingKind<T>,
    pub f: Expr<T>,
    pub df: Expr<T>,
    pub ddf: Expr<T>,
}

impl<T: Real> Warping<T> {
    pub fn spherical(kappa: T) -> Self {
        let s = kappa.sqrt();
        let arg = Expr::c(s) * Expr::t();
        Warping {
            kind: WarpingKind::Spherical { kappa },
            f: Expr::c(T::one() / s) * arg.clone().sin(),
            df: arg.clone().cos(),
            ddf: Expr::c(-s) * arg.sin(),
        }
    }

    pub fn flat() -> Self {
        Warping { kind: WarpingKind::Flat, f: Expr::t(), df: Expr::one(), ddf: Expr::zero() }
    }

    pub fn hyperbolic(kappa: T) -> Self {
        let s = (-kappa).sqrt();
        let arg = Expr::c(s) * Expr::t();
        Warping {
            kind: WarpingKind::Hyperbolic { kappa },
            f: Expr::c(T::one() / s) * arg.clone().sinh(),
            df: arg.clone().cosh(),
            ddf: Expr::c(s) * arg.sinh(),
        }
    }

    pub fn cubic(a: T) -> Self {
        Warping {
            kind: WarpingKind::Cubic { a },
            f: Expr::t() + Expr::monomial(a, T::lit(3.0)),
            df: Expr::one() + Expr::monomial(T::lit(3.0) * a, T::lit(2.0)),
            ddf: Expr::monomial(T::lit(6.0) * a, T::one()),
        }
    }

    /// Custom warping; both derivatives must be supplied.
    pub fn custom(f: Expr<T>, df: Option<Expr<T>>, ddf: Option<Expr<T>>) -> Result<Self> {
        match (df, ddf) {
            (Some(df), Some(ddf)) => Ok(Warping { kind: WarpingKind::Custom, f, df, ddf }),
            _ => Err(Error::CatalogDerivativeMissing(format!("warping `{f}` needs f' and f''"))),
        }
    }

    /// Custom warping with symbolic derivatives.
    pub fn differentiate(f: Expr<T>) -> Self {
        let df = f.derivative();
        let ddf = df.derivative();
        Warping { kind: WarpingKind::Custom, f, df, ddf }
    }

    /// `-f''/f`, in closed form for the catalog entries.
    pub fn curvature(&self) -> Expr<T> {
        match &self.kind {
            WarpingKind::Spherical { kappa } | WarpingKind::Hyperbolic { kappa } => Expr::c(*kappa),
            WarpingKind::Flat => Expr::zero(),
            WarpingKind::Cubic { a } => {
                Expr::c(T::lit(-6.0) * *a) / (Expr::one() + Expr::monomial(*a, T::lit(2.0)))
            }
            WarpingKind::Custom => -(self.ddf.clone() / self.f.clone()),
        }
    }

    /// Certified `inf K`, when known.
    pub fn curvature_lower_bound(&self) -> Option<T> {
        match &self.kind {
            WarpingKind::Spherical { kappa } | WarpingKind::Hyperbolic { kappa } => Some(*kappa),
            WarpingKind::Flat => Some(T::zero()),
            WarpingKind::Cubic { a } if *a >= T::zero() => Some(T::lit(-6.0) * *a),
            WarpingKind::Cubic { .. } => Some(T::zero()),
            WarpingKind::Custom => self.curvature().as_const(),
        }
    }

    /// Whether `K <= 0` everywhere.
    pub fn nonpositive_curvature(&self) -> bool {
        match &self.kind {
            WarpingKind::Spherical { .. } => false,
            WarpingKind::Flat | WarpingKind::Hyperbolic { .. } => true,
            WarpingKind::Cubic { a } => *a >= T::zero(),
            WarpingKind::Custom => self.curvature().as_const().is_some_and(|k| k <= T::zero()),
        }
    }

    /// First positive zero of `f`, or `None` when `f > 0` on `(0, inf)`.
    pub fn first_positive_zero(&self) -> Option<T> {
        match &self.kind {
            WarpingKind::Spherical { kappa } => Some(T::PI() / kappa.sqrt()),
            WarpingKind::Cubic { a } if *a < T::zero() => Some((-T::one() / *a).sqrt()),
            WarpingKind::Custom => self.scan_first_zero(),
            _ => None,
        }
    }

    /// Sign change of a custom `f` on `(0, SCAN_LIMIT]`, refined by bisection.
    fn scan_first_zero(&self) -> Option<T> {
        let step = T::lit(SCAN_STEP);
        let mut lo = step;
        let mut f_lo = self.f.eval(lo);
        while lo < T::lit(SCAN_LIMIT) {
            let hi = lo + step;
            let f_hi = self.f.eval(hi);
            if f_hi <= T::zero() || !f_hi.is_finite() {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = (a + b) / T::lit(2.0);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if self.f.eval(mid) > T::zero() { a = mid } else { b = mid }
                }
                return (f_lo > T::zero()).then_some(b);
            }
            lo = hi;
            f_lo = f_hi;
        }
        None
    }
}

const SCAN_STEP: f64 = 1e-2;
const SCAN_LIMIT: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelManifold<T> {
    pub m: u32,
    pub warping: Warping<T>,
    /// Radius of the maximal ball on which `f > 0`; `inf` when unbounded.
    pub r_max: T,
}

impl<T: Real> ModelManifold<T> {
    /// Checks `m >= 2`, `f(0) = 0`, `f'(0) = 1` and `f(eps) / eps -> 1`.
    pub fn new(m: u32, warping: Warping<T>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParams(format!("dimension must be at least 2, got {m}")));
        }
        let f0 = warping.f.eval(T::zero());
        let df0 = warping.df.eval(T::zero());
        if f0.abs() > T::lit(1e-12) || (df0 - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::InvalidParams(format!("warping needs f(0) = 0 and f'(0) = 1, got {f0} and {df0}")));
        }
        for eps in [T::lit(1e-3), T::lit(1e-4)] {
            let ratio = warping.f.eval(eps) / eps;
            if (ratio - T::one()).abs() > T::lit(1e-3) {
                return Err(Error::InvalidParams(format!("f(eps)/eps = {ratio} at eps = {eps}")));
            }
        }
        let r_max = warping.first_positive_zero().unwrap_or(T::infinity());
        Ok(ModelManifold { m, warping, r_max })
    }

    pub fn dimension(&self) -> u32 {
        self.m
    }
}

/// Constant curvature `kappa` in dimension `m`.
pub fn space_form<T: Real>(m: u32, kappa: T) -> Result<ModelManifold<T>> {
    let warping = if kappa > T::zero() {
        Warping::spherical(kappa)
    } else if kappa < T::zero() {
        Warping::hyperbolic(kappa)
    } else {
        Warping::flat()
    };
    ModelManifold::new(m, warping)
}

/// `(K, v)` induced by the model. `b_const` is `sqrt(-inf K)` when the
/// catalog certifies a negative lower bound and `0` otherwise.
pub fn model_profiles<T: Real>(model: &ModelManifold<T>) -> Result<(CurvatureProfile<T>, Profile<T>)> {
    let w = &model.warping;
    let b_const = w.curvature_lower_bound().map_or(T::zero(), |lb| (-lb).max(T::zero()).sqrt());
    let k = Profile::new("K", w.curvature());
    let omega = sphere_area::<T>(model.m - 1);
    let v = Profile::new("v", Expr::c(omega) * w.f.clone().powf(T::lit((model.m - 1) as f64)));
    Ok((CurvatureProfile::new(k, b_const, model.m), v))
}

/// Radial pair `(v, W)` over the model with the given potential mean.
pub fn model_pair<T: Real>(model: &ModelManifold<T>, w: Profile<T>, b_const: T) -> Result<CoefficientPair<T>> {
    let (_, v) = model_profiles(model)?;
    Ok(CoefficientPair::new(v, w, b_const))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConjugateRadius<T> {
    Finite(T),
    /// Certified by `K <= 0`: Jacobi fields never vanish again.
    Infinite,
    /// No zero up to the cap and no certificate of non-oscillation.
    NotFoundBefore(T),
}

impl<T: Real> ConjugateRadius<T> {
    pub fn value(&self) -> T {
        match self {
            ConjugateRadius::Finite(t) => *t,
            _ => T::infinity(),
        }
    }
}

/// First zero of the Jacobi field `u(0) = 0`, `u'(0) = 1` along a radial geodesic.
pub fn conjugate_radius<T: Real>(model: &ModelManifold<T>, cap: T, tol: T) -> Result<ConjugateRadius<T>> {
    let (k, _) = model_profiles(model)?;
    if model.warping.nonpositive_curvature() {
        return Ok(ConjugateRadius::Infinite);
    }
    let opts = SolveOptions::new(tol).with_zero_cap(1);
    let traj = solve_jacobi_with(&k, cap, &opts)?;
    Ok(match traj.first_zero() {
        Some(z) => ConjugateRadius::Finite(z.midpoint()),
        None => ConjugateRadius::NotFoundBefore(cap),
    })
}
