use oscillate::criteria::{check_first_zero, check_main_b2, check_oscillation, search_main_b2};
use oscillate::geometry::{conjugate_radius, model_profiles, space_form, ModelManifold, Warping};
use oscillate::ode::{extend_until_zero, solve_jacobi, solve_radial};
use oscillate::{parse_expr, CoefficientPair, CurvatureProfile, Expr, Profile, SpectralReport, Status};
use proptest::prelude::*;
use std::f64::consts::PI;

const TOL: f64 = 1e-10;

fn profile(src: &str) -> Profile<f64> {
    Profile::new(src, src.parse::<Expr<f64>>().unwrap())
}

#[test]
fn parsed_profiles_evaluate_like_closed_forms() {
    let mu = 0.3;
    let e = parse_expr::<f64>("$mu * t^-2 + sin(pi*t)^2", &|n| (n == "mu").then_some(mu)).unwrap();
    for t in [0.5, 1.0, 2.5, 7.0] {
        let want = mu / (t * t) + (PI * t).sin().powi(2);
        assert!((e.eval(t) - want).abs() < 1e-14);
    }
    assert!("1 + * t".parse::<Expr<f64>>().is_err());
}

#[test]
fn round_sphere_from_a_warping_function() {
    let custom = ModelManifold::new(2, Warping::<f64>::differentiate("sin(r)".parse().unwrap())).unwrap();
    assert!((custom.r_max - PI).abs() < 1e-8);
    let (k, v) = model_profiles(&custom).unwrap();
    for t in [0.3f64, 1.0, 2.0] {
        assert!((k.k.eval(t) - 1.0).abs() < 1e-12);
        assert!((v.eval(t) - 2.0 * PI * t.sin()).abs() < 1e-12);
    }
    let r = conjugate_radius(&custom, 10.0, TOL).unwrap().value();
    let r_sf = conjugate_radius(&space_form(2, 1.0).unwrap(), 10.0, TOL).unwrap().value();
    assert!((r - PI).abs() < 1e-8 && (r - r_sf).abs() < 1e-8);
}

#[test]
fn compactness_witness_is_backed_by_a_conjugate_point() {
    let k = CurvatureProfile::new(profile("1 + 0.5*cos(t)"), 0.0, 3);
    let v = search_main_b2(&k, &[0.0, 1.0], &[0.5, 1.0], &[2.0, 4.0, 8.0], TOL).unwrap();
    assert_eq!(v.status, Status::Satisfied);
    let tr = solve_jacobi(&k, 50.0, TOL).unwrap();
    assert!(tr.first_zero().is_some());
    let single = check_main_b2(&k, v.get("a").unwrap(), v.get("b").unwrap(), v.get("lambda").unwrap(), TOL).unwrap();
    assert_eq!(single.status, Status::Satisfied);
}

#[test]
fn flat_three_space_with_unit_potential() {
    let pair = CoefficientPair::new(profile("4*pi*t^2"), Profile::constant(1.0), 0.0);
    let tr = solve_radial(&pair, 1.0, 20.0, TOL).unwrap();
    for (k, z) in tr.zeros.iter().enumerate() {
        assert!((z.midpoint() - (k + 1) as f64 * PI).abs() < 1e-7);
    }
    assert_eq!(check_oscillation(&pair, 1.0, 1e3, TOL).unwrap().status, Status::Satisfied);
    let report = SpectralReport::build(&pair, &[1.0, 5.0], 20.0, TOL).unwrap();
    assert_eq!(report.index_lower_bound, 5);
    assert!(report.rayleigh_values.iter().all(|(_, q)| q.abs() < 1e-6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // Constant potential w on v = 1 with B = 0: the threshold is 0, so any
    // positive integral fires, and the solution cos(sqrt(w) t) confirms it.
    #[test]
    fn first_zero_matches_cosine(w in 0.05f64..4.0, b in 1.0f64..10.0) {
        let pair = CoefficientPair::new(Profile::constant(1.0), Profile::constant(w), 0.0).with_start(1.0);
        let v = check_first_zero(&pair, 1.0, b, TOL).unwrap();
        prop_assert_eq!(v.status, Status::Satisfied);
        let found = extend_until_zero(&pair, 1.0, 1e4, TOL).unwrap();
        let z = found.zero().unwrap().midpoint();
        prop_assert!((z - (1.0 + PI / (2.0 * w.sqrt()))).abs() < 1e-7);
    }
}
