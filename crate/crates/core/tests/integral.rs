use nullcert::certsolver::MembershipProblem;
use nullcert::polyring::Poly;
use nullcert::quad::{
    calibrate, certify_integral, regularized_residual_study, reproduce_section, CalibrationStore,
    QuadConfig, QuadError, Strategy,
};
use num_complex::Complex64;

fn p(vars: &[&str], terms: &[(i64, &[u32])]) -> Poly {
    Poly::from_int_terms(vars, terms)
}

fn store_for(n: usize, strategy: Strategy) -> CalibrationStore {
    let mut s = CalibrationStore::new();
    s.insert(calibrate(n, &QuadConfig::new(strategy, 8192, 0)).unwrap());
    s
}

#[test]
fn plane_residual_on_non_unique_instance() {
    let v = ["x", "y"];
    let problem = MembershipProblem::ideal(
        &[p(&v, &[(1, &[1, 0])]), p(&v, &[(1, &[0, 1])])],
        &p(&v, &[(1, &[2, 0]), (1, &[1, 1])]),
    )
    .unwrap();
    let store = store_for(2, Strategy::SphereMonteCarlo);
    let cfg = QuadConfig::new(Strategy::SphereMonteCarlo, 400_000, 11).with_eps(Some(1e-2));
    let cert = certify_integral(&problem, 2, None, &cfg, &store).unwrap();
    assert!(!cert.zero_set_empty);
    assert!(cert.solution_dimension.unwrap() > 0);
    assert_eq!(cert.exact_distance, None);
    assert!(cert.residual().max_rel < 1e-2, "{:?}", cert.residual());
}

#[test]
fn default_eps_is_applied_when_zero_set_is_nonempty() {
    let x = p(&["x"], &[(1, &[1])]);
    let problem = MembershipProblem::ideal(&[&x * &x, x.clone()], &x).unwrap();
    let store = store_for(1, Strategy::ChartGrid);
    let cert = certify_integral(
        &problem,
        2,
        None,
        &QuadConfig::new(Strategy::ChartGrid, 20_000, 0),
        &store,
    )
    .unwrap();
    assert!(cert.eps_auto);
    assert_eq!(cert.eps, Some(nullcert::quad::DEFAULT_EPS));
    assert!(cert.residual().max_rel < 1e-3, "{:?}", cert.residual());
}

#[test]
fn monte_carlo_certificates_ignore_thread_count() {
    let x = p(&["x"], &[(1, &[1])]);
    let xm1 = p(&["x"], &[(1, &[1]), (-1, &[0])]);
    let problem = MembershipProblem::ideal(&[x, xm1], &p(&["x"], &[(1, &[0])])).unwrap();
    let store = store_for(1, Strategy::SphereMonteCarlo);
    let mut a = QuadConfig::new(Strategy::SphereMonteCarlo, 20_000, 3);
    a.threads = Some(1);
    let mut b = a.clone();
    b.threads = Some(3);
    let ca = certify_integral(&problem, 1, None, &a, &store).unwrap();
    let cb = certify_integral(&problem, 1, None, &b, &store).unwrap();
    assert_eq!(ca.coefficients, cb.coefficients);
    assert_eq!(ca.certificate, cb.certificate);
}

#[test]
fn reproduce_is_linear_within_error_bars() {
    let store = store_for(1, Strategy::ChartMonteCarlo);
    let cfg = QuadConfig::new(Strategy::ChartMonteCarlo, 50_000, 8);
    let vars = ["z0", "z1"];
    let p1 = p(&vars, &[(1, &[2, 0])]);
    let p2 = p(&vars, &[(1, &[1, 1])]);
    let combo = &p1.scale(&nullcert::GaussRational::from_integer(3)) - &p2;
    let z = [Complex64::new(0.4, 0.9), Complex64::new(-1.1, 0.2)];
    let r1 = reproduce_section(&p1, 3, &z, &cfg, &store).unwrap();
    let r2 = reproduce_section(&p2, 3, &z, &cfg, &store).unwrap();
    let rc = reproduce_section(&combo, 3, &z, &cfg, &store).unwrap();
    let lin = r1.value * 3.0 - r2.value;
    let bar = 3.0 * r1.std_error + r2.std_error + rc.std_error;
    assert!(
        (rc.value - lin).norm() <= 5.0 * bar + 1e-12,
        "{} vs {lin} ± {bar}",
        rc.value
    );
    let want = combo.evaluate(&z).unwrap();
    assert!(
        (rc.value - want).norm() < 5.0 * rc.std_error + 1e-9,
        "{} vs {want}",
        rc.value
    );
}

#[test]
fn constant_section_reproduces_one_in_the_plane() {
    let store = store_for(2, Strategy::SphereMonteCarlo);
    let one = p(&["z0", "z1", "z2"], &[(1, &[0, 0, 0])]);
    let z = [
        Complex64::new(0.2, 0.1),
        Complex64::new(1.0, -0.3),
        Complex64::new(-0.5, 0.8),
    ];
    let r = reproduce_section(
        &one,
        2,
        &z,
        &QuadConfig::new(Strategy::SphereMonteCarlo, 4096, 1),
        &store,
    )
    .unwrap();
    assert!((r.value - 1.0).norm() < 1e-9);
}

#[test]
fn empty_zero_set_study_is_flat_in_eps() {
    let x = p(&["x"], &[(1, &[1])]);
    let xm1 = p(&["x"], &[(1, &[1]), (-1, &[0])]);
    let problem = MembershipProblem::ideal(&[x, xm1], &p(&["x"], &[(1, &[0])])).unwrap();
    let store = store_for(1, Strategy::ChartGrid);
    let mut cfg = QuadConfig::new(Strategy::ChartGrid, 20_000, 0);
    cfg.eps_sequence = Some(vec![1e-2, 1e-3, 1e-4]);
    let rows = regularized_residual_study(&problem, 1, &cfg, &store).unwrap();
    for r in &rows {
        assert!((r.residual_max_abs - rows[0].residual_max_abs).abs() < 1e-9);
        assert!(r.residual_max_abs < 1e-6);
    }
}

#[test]
fn threshold_and_precondition_errors() {
    let x = p(&["x"], &[(1, &[1])]);
    let xm1 = p(&["x"], &[(1, &[1]), (-1, &[0])]);
    let problem = MembershipProblem::ideal(&[x.clone(), xm1], &p(&["x"], &[(1, &[0])])).unwrap();
    let store = store_for(1, Strategy::ChartMonteCarlo);
    let mut cfg = QuadConfig::new(Strategy::ChartMonteCarlo, 1000, 0);
    cfg.max_std_error = Some(1e-12);
    assert!(matches!(
        certify_integral(&problem, 1, None, &cfg, &store),
        Err(QuadError::NotConverged { .. })
    ));
    // below the Koszul solvability degree
    let sq = MembershipProblem::ideal(&[&x * &x, &x * &x], &p(&["x"], &[(1, &[0])])).unwrap();
    let cfg = QuadConfig::new(Strategy::ChartMonteCarlo, 1000, 0);
    assert!(matches!(
        certify_integral(&sq, 2, None, &cfg, &store),
        Err(QuadError::Config(_))
    ));
    let grid = QuadConfig::new(Strategy::ChartGrid, 1000, 0);
    assert!(matches!(
        certify_integral(&problem, 1, None, &grid, &store),
        Err(QuadError::NotCalibrated { .. })
    ));
}
