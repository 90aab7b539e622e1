use oscillate::criteria::{check_diameter_remark, check_myers_galloway};
use oscillate::ode::{solve_jacobi, solve_radial};
use oscillate::{CoefficientPair, Conclusion, CurvatureProfile, Expr, Profile};

#[test]
fn sphere_zero_in_f32() {
    let k = CurvatureProfile::new(Profile::<f32>::constant(1.0), 0.0, 2);
    let tr = solve_jacobi(&k, 7.0, 1e-5).unwrap();
    assert_eq!(tr.zeros.len(), 2);
    assert!((tr.zeros[1].midpoint() - 2.0 * std::f32::consts::PI).abs() < 1e-3);
}

#[test]
fn criteria_in_f32() {
    let v = check_myers_galloway(2.0f32, 0.0, 3).unwrap();
    assert!(v.conclusion.iter().any(|c| matches!(c, Conclusion::DiameterBound(d) if (d - std::f64::consts::PI).abs() < 1e-5)));
    let k = CurvatureProfile::new(Profile::<f32>::constant(1.0), 0.0, 3);
    assert!(check_diameter_remark(&k, 10.0, 1e-5).unwrap().is_satisfied());
    assert!(!check_diameter_remark(&k, 9.5, 1e-5).unwrap().is_satisfied());
}

#[test]
fn singular_start_in_f32() {
    let pair = CoefficientPair::new(Profile::new("t^2", Expr::<f32>::monomial(1.0, 2.0)), Profile::constant(1.0), 0.0);
    let tr = solve_radial(&pair, 1.0, 4.0, 1e-5).unwrap();
    assert!((tr.first_zero().unwrap().midpoint() - std::f32::consts::PI).abs() < 1e-3);
}
