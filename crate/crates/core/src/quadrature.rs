//! Globally adaptive bisection with a 7/15-point Gauss-Kronrod pair per panel.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

impl<T: Real> QuadOptions<T> {
    /// The `tol * (1 + |Q|)` criterion.
    pub fn with_tol(tol: T) -> Self {
        QuadOptions { abs_tol: tol, rel_tol: tol, max_panels: 1_000_000 }
    }

    /// Purely relative criterion, for integrals whose magnitude may be far below one.
    pub fn relative(tol: T) -> Self {
        QuadOptions { abs_tol: T::min_positive_value(), rel_tol: tol, max_panels: 1_000_000 }
    }
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self::with_tol(T::default_tol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub panels: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.partial_cmp(&o.error).unwrap_or(Ordering::Equal)
    }
}

fn sample<T: Real, F: Fn(T) -> T>(f: &F, t: T) -> Result<T> {
    let y = f(t);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteSample { t: t.as_f64(), value: y.as_f64() })
    }
}

fn gauss_kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Result<Panel<T>> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = sample(f, center)?;
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = hl * T::lit(XGK[j]);
        let s = sample(f, center - dx)? + sample(f, center + dx)?;
        kron = kron + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * s;
        }
    }
    let value = kron * hl;
    let error = ((kron - gauss) * hl).abs();
    Ok(Panel { a, b, value, error })
}

/// Integrates `f` over the finite interval `[a, b]` (either orientation).
pub fn integrate_fn<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    opts: &QuadOptions<T>,
) -> Result<Quadrature<T>> {
    if a == b {
        return Ok(Quadrature { value: T::zero(), error: T::zero(), panels: 0 });
    }
    if b < a {
        let q = integrate_fn(f, b, a, opts)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    let first = gauss_kronrod(&f, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut panels = 1usize;
    let eps = T::epsilon() * T::lit(64.0);
    // Relative accuracy below the working precision is unreachable.
    let rel_tol = opts.rel_tol.max(T::epsilon() * T::lit(100.0));
    loop {
        let target = opts.abs_tol.max(rel_tol * value.abs());
        if error <= target {
            break;
        }
        if panels >= opts.max_panels {
            return Err(Error::ToleranceNotMet { estimate: error.as_f64(), panels });
        }
        let worst = heap.pop().expect("heap holds every panel");
        let mid = T::lit(0.5) * (worst.a + worst.b);
        if (worst.b - worst.a) <= eps * mid.abs().max(T::min_positive_value()) {
            // Roundoff floor: the panel cannot be split further.
            return Err(Error::ToleranceNotMet { estimate: error.as_f64(), panels });
        }
        let left = gauss_kronrod(&f, worst.a, mid)?;
        let right = gauss_kronrod(&f, mid, worst.b)?;
        value = value - worst.value + left.value + right.value;
        error = error - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        panels += 1;
        if panels % 64 == 0 {
            // Resum to keep cancellation drift out of the running totals.
            value = heap.iter().fold(T::zero(), |s, p| s + p.value);
            error = heap.iter().fold(T::zero(), |s, p| s + p.error);
        }
    }
    Ok(Quadrature { value, error, panels })
}

/// Integrates over `[a, inf)` by marching geometrically growing panels until the
/// supplied analytic remainder `tail_at(T)` is negligible, then adds that remainder.
pub fn integrate_to_infinity<T, F, G>(
    f: F,
    a: T,
    tail_at: G,
    opts: &QuadOptions<T>,
) -> Result<Quadrature<T>>
where
    T: Real,
    F: Fn(T) -> T,
    G: Fn(T) -> T,
{
    let mut lo = a;
    let mut total = T::zero();
    let mut error = T::zero();
    let mut panels = 0usize;
    let cap = T::tail_cap();
    let piece = QuadOptions { abs_tol: opts.abs_tol * T::lit(0.01), ..*opts };
    loop {
        let hi = lo + lo.abs().max(T::one());
        let q = integrate_fn(&f, lo, hi, &piece)?;
        total = total + q.value;
        error = error + q.error;
        panels += q.panels;
        lo = hi;
        let rest = tail_at(lo);
        let negligible = rest.abs() <= T::lit(0.01) * opts.abs_tol.max(opts.rel_tol * total.abs());
        if negligible || lo >= cap {
            total = total + rest;
            break;
        }
    }
    Ok(Quadrature { value: total, error, panels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_sine() {
        let o = QuadOptions::with_tol(1e-10);
        let q = integrate_fn(|_| 1.0, 0.5, 2.5, &o).unwrap();
        assert!((q.value - 2.0f64).abs() < 1e-14);
        let q = integrate_fn(f64::sin, 0.0, std::f64::consts::PI, &o).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_and_singular_endpoint() {
        let o = QuadOptions::with_tol(1e-10);
        let q = integrate_fn(|t: f64| t.powf(-0.5), 1.0, 0.0, &o).unwrap();
        assert!((q.value + 2.0).abs() < 1e-9, "{}", q.value);
    }

    #[test]
    fn non_finite_sample_reported() {
        let o = QuadOptions::with_tol(1e-10);
        let err = integrate_fn(|t: f64| 1.0 / (t - 1.0), 0.0, 2.0, &o);
        // The centre node lands exactly on the pole.
        assert!(matches!(err, Err(Error::NonFiniteSample { .. })));
    }

    #[test]
    fn budget_exhaustion() {
        let o = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-14, max_panels: 4 };
        let err = integrate_fn(|t: f64| (1.0 / t).sin(), 1e-3, 1.0, &o);
        assert!(matches!(err, Err(Error::ToleranceNotMet { .. })));
    }

    #[test]
    fn tail_march_power() {
        let o = QuadOptions::with_tol(1e-10);
        let q = integrate_to_infinity(|t: f64| t.powi(-2), 1.0, |t| 1.0 / t, &o).unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn f32_supported() {
        let o = QuadOptions::<f32>::default();
        let q = integrate_fn(|t: f32| t * t, 0.0, 3.0, &o).unwrap();
        assert!((q.value - 9.0).abs() < 1e-4);
    }
}
