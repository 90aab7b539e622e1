//! Scalar abstraction shared by every numerical routine in the crate.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts a literal. Every literal used in the crate is representable in `f32`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion used for reports and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Default tolerance for quadrature and the ODE integrator.
    fn default_tol() -> Self;

    /// Largest abscissa the improper-integral machinery will march to.
    fn tail_cap() -> Self;
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-10
    }
    fn tail_cap() -> Self {
        1e100
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-5
    }
    fn tail_cap() -> Self {
        1e18
    }
}

/// `b * coth(b * x)`, continuous through `b = 0` (limit `1/x`) and `x = inf` (limit `b`).
///
/// Every V-dependent bound reduces to this form: `B (V+1)/(V-1)` with `V = exp(2 B x)`.
pub fn b_coth<T: Real>(b: T, x: T) -> T {
    if x.is_infinite() {
        return b;
    }
    if b == T::zero() {
        return x.recip();
    }
    b / (b * x).tanh()
}

/// `2 B V / (V - 1)` with `V = exp(2 B x)`; limit `1/x` as `B -> 0` and `2B` as `x -> inf`.
pub fn two_b_v_over_v_minus_one<T: Real>(b: T, x: T) -> T {
    if x.is_infinite() {
        return b + b;
    }
    b_coth(b, x) + b
}
