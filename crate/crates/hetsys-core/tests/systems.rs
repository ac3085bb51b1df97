use std::sync::Arc;

use hetsys_core::algebroid::MetricPair;
use hetsys_core::gauge::{Bundle, Reduction};
use hetsys_core::hermitian::{psi_squared, HermitianStructure};
use hetsys_core::lie_exterior::Form;
use hetsys_core::linalg::C64;
use hetsys_core::models::{self, CatalogEntry};
use hetsys_core::systems::{
    appendix_bridge, appendix_constants, appendix_residual, appendix_to_hs, calabi_residual,
    calabi_residual_params, hs_residual, hs_to_appendix, twisted_hs_residual, ResidualReport,
};
use hetsys_core::Error;
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn hopf_solution(x: f64, a: f64) -> CatalogEntry {
    models::hopf(c(x), a, a / x, 1.0).unwrap()
}

/// Non-balanced `h3` metric.
fn h3_skewed() -> CatalogEntry {
    let e = models::h3(1.0).unwrap();
    let omega = &e.omega + &e.model.basis(&[2, 3]);
    e.with_omega(omega)
}

fn with_volume_mu(e: &CatalogEntry) -> HermitianStructure {
    let h = e.hermitian().unwrap();
    let vol = h.volume_form().clone();
    h.with_mu(vol).unwrap()
}

fn holomorphic_mu(e: &CatalogEntry) -> HermitianStructure {
    let mu = psi_squared(&e.psi, e.cs.n()).unwrap();
    HermitianStructure::new(e.cs.clone(), e.omega.clone(), Some(mu)).unwrap()
}

#[test]
fn hopf_quaternionic_solutions_solve_the_twisted_system() {
    for &(x, a) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.3)] {
        let e = hopf_solution(x, a);
        let h = e.hermitian().unwrap();
        let r = twisted_hs_residual(&h, &e.normalized_psi().unwrap(), &e.bundle, true, None).unwrap();
        assert!(r.pass, "{:?}", r);
        assert!(r.max_residual() <= 1e-10);
        assert_eq!(r.residuals.len(), 5);
    }
}

#[test]
fn twisted_system_on_the_flat_torus() {
    let e = models::torus(2, 1.0).unwrap();
    let h = e.hermitian().unwrap();
    let r = twisted_hs_residual(&h, &e.normalized_psi().unwrap(), &e.bundle, true, None).unwrap();
    assert_eq!(r.max_residual(), 0.0);
}

#[test]
fn hopf_with_imaginary_parameter_fails() {
    let e = models::hopf(C64::new(1.0, 0.5), 1.0, 1.0, 1.0).unwrap();
    let h = e.hermitian().unwrap();
    let r = twisted_hs_residual(&h, &e.normalized_psi().unwrap(), &e.bundle, true, None).unwrap();
    assert!(r.get("dpsi").unwrap() > 1e-6);
    assert!(!r.pass);
}

#[test]
fn twisted_system_rejects_forms_of_the_wrong_type() {
    let e = hopf_solution(1.0, 1.0);
    let h = e.hermitian().unwrap();
    assert!(twisted_hs_residual(&h, &e.psi.conj(), &e.bundle, false, None).is_err());
}

#[test]
fn hull_strominger_examples() {
    let e = models::torus(2, 1.0).unwrap().with_bundle(models::torus_flat_bundle(2, C64::new(0.4, 0.2)));
    let r = hs_residual(&e.hermitian().unwrap(), &e.psi, &e.bundle, None).unwrap();
    assert!(r.pass);
    assert_eq!(r.max_residual(), 0.0);

    let s = h3_skewed();
    let r = hs_residual(&s.hermitian().unwrap(), &s.psi, &s.bundle, None).unwrap();
    assert!((r.get("dstar_omega").unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    assert!((r.get("conformally_balanced").unwrap() - 8f64.sqrt()).abs() < 1e-10);
    assert!(!r.pass);

    let hopf = hopf_solution(1.0, 1.0);
    assert!(matches!(
        hs_residual(&hopf.hermitian().unwrap(), &hopf.psi, &hopf.bundle, None),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn standard_embedding_on_the_torus() {
    let e = models::torus(3, 1.0).unwrap();
    let bundle = models::torus_double_su2_bundle(3, [c(0.0), c(0.0), C64::new(0.3, -0.7)], 1.0);
    assert!(bundle.pontryagin(&e.model).unwrap().norm_max() < 1e-15);
    let r = hs_residual(&e.hermitian().unwrap(), &e.psi, &bundle, None).unwrap();
    assert!(r.pass && r.max_residual() <= 1e-10);
}

#[test]
fn strominger_round_trip() {
    let cases = [
        models::torus(3, 1.0).unwrap(),
        models::torus(2, 2.0).unwrap().with_bundle(models::torus_flat_bundle(2, c(0.5))),
        models::h3(1.0).unwrap(),
        h3_skewed(),
    ];
    for e in cases {
        let h = e.hermitian().unwrap();
        let psi = e.normalized_psi().unwrap();
        let twisted = twisted_hs_residual(&h, &psi, &e.bundle, true, None).unwrap();
        let hs = hs_residual(&h, &e.psi, &e.bundle, None).unwrap();
        assert_eq!(twisted.pass, hs.pass, "{}", e.name);
    }
}

#[test]
fn lee_class_is_fixed_by_the_complex_structure() {
    let thetas: Vec<Form> = [0.5, 1.0, 3.0]
        .iter()
        .map(|&a| hopf_solution(1.3, a).hermitian().unwrap().lee_form().clone())
        .collect();
    for t in &thetas[1..] {
        assert!((t - &thetas[0]).norm_max() < 1e-10);
    }
}

#[test]
fn calabi_examples() {
    let e = models::torus(2, 1.0).unwrap();
    let r = calabi_residual(&with_volume_mu(&e), &e.bundle, None).unwrap();
    assert_eq!(r.max_residual(), 0.0);
    for t in [0.3, 1.0, 4.0] {
        let e = models::hopf(c(1.0), 1.0, t, 1.0).unwrap();
        let h = e.hermitian().unwrap();
        let r = calabi_residual(&h, &e.bundle, None).unwrap();
        assert!(!r.pass);
        assert!(r.get("lee_minus_df").unwrap() > 1e-3);
        // e^{-f} d(ω) = e^{-f} θ ∧ ω at n = 2
        let f = h.dilaton_function().unwrap();
        let other = (-f).exp() * h.l2_norm(&h.lee_form().w(h.omega()));
        assert!((r.get("conformally_balanced").unwrap() - other).abs() < 1e-12);
    }
}

#[test]
fn parametrized_calabi_residual_at_the_base() {
    let e = models::hopf(c(1.0), 1.0, 1.0, 1.0).unwrap();
    let h = e.hermitian().unwrap();
    let base = MetricPair::new(Arc::clone(&e.cs), e.omega.clone(), e.bundle.clone());
    let direct = calabi_residual(&h, &e.bundle, Some(1e-8)).unwrap();
    let param = calabi_residual_params(&base, &e.mu, &Form::zero(4, 1), &Reduction::zero(3), None).unwrap();
    for (k, v) in &direct.residuals {
        assert!((v - param.get(k).unwrap()).abs() < 1e-12);
    }
    assert!(matches!(
        calabi_residual_params(&base, &e.mu, &e.model.e(0).scale_re(-5.0), &Reduction::zero(3), None),
        Err(Error::NotPositive(_))
    ));
}

#[test]
fn appendix_constants_table() {
    assert_eq!(appendix_constants(3).unwrap(), (4.0, 1.0 / 3.0));
    let (l, g) = appendix_constants(5).unwrap();
    assert!((l - 8.0 / 3.0).abs() < 1e-15 && (g - 0.6).abs() < 1e-15);
    assert!(matches!(appendix_constants(2), Err(Error::Precondition(_))));
}

#[test]
fn appendix_system_on_the_flat_six_torus() {
    let e = models::torus(3, 1.0).unwrap().with_bundle(models::torus_flat_bundle(3, C64::new(0.3, 0.1)));
    let h = with_volume_mu(&e);
    let r = appendix_residual(&h, &e.bundle, &Reduction::zero(3), &e.omega, None).unwrap();
    assert_eq!(r.max_residual(), 0.0);
    let hopf = hopf_solution(1.0, 1.0);
    assert!(appendix_residual(&hopf.hermitian().unwrap(), &hopf.bundle, &Reduction::zero(3), &hopf.omega, None).is_err());
}

#[test]
fn appendix_bridge_and_round_trip() {
    for scale in [0.5, 1.0, 3.0] {
        let base = models::torus(3, 1.0).unwrap().with_bundle(models::torus_flat_bundle(3, C64::new(0.3, 0.1)));
        let e = base.with_omega(base.omega.scale_re(scale));
        let h = holomorphic_mu(&e);
        let r = appendix_residual(&h, &e.bundle, &Reduction::zero(3), &e.omega, None).unwrap();
        assert!(r.pass);
        let bridge = appendix_bridge(&h, &e.bundle, &e.psi, None).unwrap();
        assert!(bridge.pass && bridge.max_residual() <= 1e-8);
        let back = hs_to_appendix(&appendix_to_hs(&h).unwrap(), &e.psi).unwrap();
        assert!((back.omega() - h.omega()).norm_max() < 1e-12);
    }
}

#[test]
fn reports_are_deterministic() {
    let e = models::hopf(C64::new(1.3, 0.2), 0.7, 0.6, 1.0).unwrap();
    let run = || -> ResidualReport {
        let h = e.hermitian().unwrap();
        twisted_hs_residual(&h, &e.psi, &e.bundle, true, None)
            .unwrap()
            .with_meta(&e.name, &e.params)
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn report_pass_matches_tolerances(values in prop::collection::vec((0.0..2.0f64, 0.0..2.0f64), 1..8)) {
        let mut r = ResidualReport::new();
        for (i, (v, t)) in values.iter().enumerate() {
            r.push(&format!("eq{}", i), *v, *t);
        }
        prop_assert_eq!(r.pass, values.iter().all(|(v, t)| v <= t));
    }

    #[test]
    fn hopf_solutions_for_any_real_parameter(x in 0.2..4.0f64, a in 0.2..4.0f64) {
        let e = hopf_solution(x, a);
        let h = e.hermitian().unwrap();
        let r = twisted_hs_residual(&h, &e.normalized_psi().unwrap(), &Bundle::trivial(e.bundle.algebra.clone(), 4), true, None).unwrap();
        prop_assert!(r.pass);
    }
}
