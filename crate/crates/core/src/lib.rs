//! Comparison and oscillation tools for the radial equation
//! `(v z')' + W v z = 0` and the Jacobi equation `u'' + K u = 0`.
//!
//! The numerical core is generic over [`Real`] (implemented for `f32` and
//! `f64`); the `*64` aliases below cover the common case.

pub mod criteria;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod ode;
pub mod parse;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod riccati;
pub mod scalar;
pub mod spectral;

pub use criteria::{Conclusion, CriterionId, Status, Verdict};
pub use error::{Error, Result};
pub use expr::{Asymptote, Expr, Term};
pub use profiles::{
    big_v, integrate, tail_integral, weighted_moment, CoefficientPair, CurvatureProfile, Divergence,
    L1Status, Profile, StartBehavior, TailClass,
};
pub use geometry::{conjugate_radius, model_profiles, space_form, ConjugateRadius, ModelManifold, Warping};
pub use parse::{parse_expr, ParseExprError};
pub use ode::{solve_jacobi, solve_radial, SolveOptions, Trajectory, ZeroCertificate};
pub use riccati::{ComparisonFamily, RiccatiTrajectory};
pub use scalar::Real;
pub use spectral::SpectralReport;

pub type Expr64 = Expr<f64>;
pub type Profile64 = Profile<f64>;
pub type CoefficientPair64 = CoefficientPair<f64>;
pub type CurvatureProfile64 = CurvatureProfile<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ModelManifold64 = ModelManifold<f64>;
pub type SpectralReport64 = SpectralReport<f64>;
