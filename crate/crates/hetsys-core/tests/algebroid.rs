use std::sync::Arc;

use hetsys_core::algebroid::{
    aeppli_class_margin, aeppli_class_positive, bott_chern_fit, class_equivalent, cocycle_check,
    dbar_kernel_section, metric_from_parameters, twist, MetricPair, StringClassRep,
};
use hetsys_core::cohomology::aeppli_class_of;
use hetsys_core::gauge::Reduction;
use hetsys_core::lie_exterior::Form;
use hetsys_core::linalg::{max_abs_vec, null_space, CMat, CVec, C64};
use hetsys_core::linearization::assemble_l;
use hetsys_core::models::{self, CatalogEntry};
use hetsys_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

const W: C64 = C64 { re: 1.3, im: 0.2 };

fn hopf_su2() -> CatalogEntry {
    models::hopf(W, 0.7, 0.6, 2.0)
        .unwrap()
        .with_bundle(models::hopf_su2_curved_bundle(W, C64::new(0.3, 0.2), [0.3, 0.5, 0.7], 0.4))
}

fn pair_of(e: &CatalogEntry) -> MetricPair {
    MetricPair::new(e.cs.clone(), e.omega.clone(), e.bundle.clone())
}

fn real_one_form(v: &[f64]) -> Form {
    Form::from_coeffs(v.len(), 1, v.iter().map(|&x| c(x)).collect()).unwrap()
}

#[test]
fn representatives_are_equivalent_to_themselves() {
    let e = hopf_su2();
    let h = e.hermitian().unwrap();
    let r = pair_of(&e).representative().unwrap();
    let eq = class_equivalent(&h, &r, &r, 1e-10).unwrap();
    assert!(eq.equivalent);
    assert!(eq.b.norm_max() < 1e-12);
}

#[test]
fn exact_shift_is_equivalent() {
    let e = hopf_su2();
    let h = e.hermitian().unwrap();
    let r = pair_of(&e).representative().unwrap();
    let b20 = e.cs.pq_basis(2, 0);
    let b = Form::from_vec(4, 2, &(&b20 * CVec::from_element(b20.ncols(), C64::new(0.4, -1.1))));
    let shifted = StringClassRep::new(&e.cs, &r.h + &e.model.d(&b).unwrap(), r.bundle.clone()).unwrap();
    assert!(class_equivalent(&h, &r, &shifted, 1e-10).unwrap().equivalent);
    let other = StringClassRep::new(&e.cs, &r.h + &e.cs.del(&e.model.basis(&[3, 0])).scale(C64::new(0.0, 2.0)), r.bundle.clone()).unwrap();
    assert!(!class_equivalent(&h, &r, &other, 1e-10).unwrap().equivalent);
}

#[test]
fn invalid_representatives_are_rejected() {
    let e = hopf_su2();
    let mixed = e.cs.project(&e.model.basis(&[0, 1, 2]), 1, 2);
    assert!(matches!(
        StringClassRep::new(&e.cs, mixed, e.bundle.clone()),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        StringClassRep::new(&e.cs, e.omega.clone(), e.bundle.clone()),
        Err(Error::Degree { expected: 3, found: 2 })
    ));
    let h3 = models::h3(1.0).unwrap().with_bundle(models::h3_su2_bundle([c(0.3), c(0.1), c(0.5)], [0.0; 3], 1.0));
    assert!(pair_of(&h3).representative().is_err());
}

#[test]
fn twisting() {
    let e = hopf_su2();
    let h = e.hermitian().unwrap();
    let r = pair_of(&e).representative().unwrap();
    let same = twist(&e.cs, &r, &Form::zero(4, 2)).unwrap();
    assert_eq!(same.h, r.h);

    let t = models::torus(2, 1.0).unwrap().with_bundle(models::torus_flat_bundle(2, C64::new(0.2, 0.1)));
    let ht = t.hermitian().unwrap();
    let rt = pair_of(&t).representative().unwrap();
    let beta = &t.model.basis(&[0, 1]).scale_re(0.3) + &t.model.basis(&[0, 2]);
    let twisted = twist(&t.cs, &rt, &beta).unwrap();
    assert!(class_equivalent(&ht, &rt, &twisted, 1e-10).unwrap().equivalent);

    // a negative class becomes positive after twisting by a multiple of ω
    let neg = StringClassRep::from_metric(&e.cs, &e.omega.scale_re(-1.0), e.bundle.clone()).unwrap();
    let fit = bott_chern_fit(&h, &neg);
    assert!(fit.is_bott_chern(1e-10));
    assert!(!aeppli_class_positive(&e.cs, &fit.tau));
    let lifted = twist(&e.cs, &neg, &e.omega.scale_re(3.0)).unwrap();
    let fit = bott_chern_fit(&h, &lifted);
    assert!(fit.is_bott_chern(1e-10));
    assert!(aeppli_class_positive(&e.cs, &fit.tau));
    assert!(aeppli_class_margin(&e.cs, &e.omega, 200) > 0.0);

    assert!(matches!(twist(&e.cs, &r, &e.model.e(0)), Err(Error::Degree { .. })));
    let h3 = models::h3(1.0).unwrap();
    let r3 = StringClassRep::new(&h3.cs, Form::zero(6, 3), h3.bundle.clone()).unwrap();
    let not_closed = h3.model.basis(&[4, 5]);
    assert!(h3.cs.ddc(&not_closed).norm_max() > 1e-3);
    assert!(matches!(twist(&h3.cs, &r3, &not_closed), Err(Error::Precondition(_))));
}

#[test]
fn zero_parameters_give_the_base_pair() {
    let e = hopf_su2();
    let base = pair_of(&e);
    let p = metric_from_parameters(&base, &Form::zero(4, 1), &Reduction::zero(3)).unwrap();
    assert_eq!(p.omega, base.omega);
    assert!(p.positive);
}

#[test]
fn large_parameters_leave_the_positive_cone_without_error() {
    let e = models::hopf(W, 0.7, 0.6, 2.0).unwrap();
    let p = metric_from_parameters(&pair_of(&e), &e.model.e(0).scale_re(-5.0), &Reduction::zero(3)).unwrap();
    assert!(!p.positive);
    assert!(metric_from_parameters(&pair_of(&e), &e.model.e(0).scale(C64::new(0.0, 1.0)), &Reduction::zero(3)).is_err());
}

#[test]
fn dbar_kernel_section_examples() {
    let t = models::torus(2, 1.0).unwrap().with_bundle(models::torus_flat_bundle(2, C64::new(0.4, 0.2)));
    let rt = pair_of(&t).representative().unwrap();
    let xi = real_one_form(&[1.0, 2.0, -0.5, 0.3]);
    // s commuting with the flat connection
    let img = dbar_kernel_section(&t.cs, &rt, &[0.0, 0.0, 0.9], &xi).unwrap();
    assert!(img.norm_max() < 1e-15);
    let trivial = models::torus(2, 1.0).unwrap();
    let r0 = pair_of(&trivial).representative().unwrap();
    let img = dbar_kernel_section(&trivial.cs, &r0, &[0.3, -0.2, 0.9], &xi).unwrap();
    assert!(img.norm_max() < 1e-15);

    let e = models::hopf(W, 0.7, 0.6, 2.0).unwrap();
    let r = pair_of(&e).representative().unwrap();
    let img = dbar_kernel_section(&e.cs, &r, &[0.5, 0.1, -0.2], &Form::zero(4, 1)).unwrap();
    assert!(img.norm_max() < 1e-15);
    let xi = e.model.e(1);
    let img = dbar_kernel_section(&e.cs, &r, &[0.0; 3], &xi).unwrap();
    let direct = e.cs.project(&e.model.d(&e.cs.project(&xi, 1, 0)).unwrap(), 1, 1).scale_re(2.0);
    assert!(img.norm_max() > 0.1);
    assert!((&img.form - &direct).norm_max() < 1e-14);
    assert!(matches!(
        dbar_kernel_section(&e.cs, &r, &[0.0; 2], &xi),
        Err(Error::Dimension(_))
    ));
}

/// Real kernel of `(ξ, s) ↦ ∂̄_Q(2ξ^{1,0} − s/4)`, as columns.
fn holomorphic_kernel_sections(e: &CatalogEntry) -> CMat {
    let r = pair_of(e).representative().unwrap();
    let m = e.model.dim();
    let rank = e.bundle.algebra.rank();
    let cols: Vec<CVec> = (0..m + rank)
        .map(|j| {
            let xi = if j < m { Form::e(m, j) } else { Form::zero(m, 1) };
            let mut s = vec![0.0; rank];
            if j >= m {
                s[j - m] = 1.0;
            }
            let img = dbar_kernel_section(&e.cs, &r, &s, &xi).unwrap();
            let v: Vec<C64> = img.gauge.to_vec().iter().chain(img.form.to_vec().iter()).copied().collect();
            CVec::from_iterator(2 * v.len(), v.iter().map(|z| c(z.re)).chain(v.iter().map(|z| c(z.im))))
        })
        .collect();
    null_space(&CMat::from_columns(&cols))
}

#[test]
fn holomorphic_kernel_sections_lie_in_the_kernel_of_the_linearization() {
    let entries = [
        models::torus(2, 1.0).unwrap().with_bundle(models::torus_flat_bundle(2, C64::new(0.4, 0.2))),
        models::torus(3, 1.0).unwrap().with_bundle(models::torus_su2_bundle(3, [C64::new(0.3, 0.1), C64::new(-0.2, 0.4), c(0.1)])),
        models::hopf(W, 0.7, 0.6, 2.0).unwrap(),
    ];
    for e in entries {
        let lin = assemble_l(&pair_of(&e)).unwrap();
        let kernel = holomorphic_kernel_sections(&e);
        assert!(kernel.ncols() > 0, "{}", e.name);
        for k in 0..kernel.ncols() {
            for part in [false, true] {
                let x = kernel.column(k).map(|z| c(if part { z.im } else { z.re }));
                let nx = max_abs_vec(&x);
                if nx < 1e-8 {
                    continue;
                }
                assert!(max_abs_vec(&lin.l.apply(&x)) <= 1e-8 * nx, "{}", e.name);
            }
        }
    }
}

#[test]
fn cocycle_over_random_generator_pairs() {
    let e = hopf_su2();
    let h = e.hermitian().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let s1: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s2: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let check = cocycle_check(&h, &e.bundle, &Reduction::from_compact(&s1).with_order(64), &s2).unwrap();
        assert!(check.defect <= 1e-8);
        assert!(check.connection_mismatch <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parametrized_metrics_stay_in_the_class(
        xi in prop::collection::vec(-0.15..0.15f64, 4),
        s in prop::array::uniform3(-0.6..0.6f64),
    ) {
        let e = hopf_su2();
        let h = e.hermitian().unwrap();
        let base = pair_of(&e);
        let path = Reduction::from_compact(&s);
        let p = metric_from_parameters(&base, &real_one_form(&xi), &path).unwrap();
        let ap = aeppli_class_of(&h, &e.bundle.algebra, &p.omega, &path, &e.omega, &e.bundle.theta).unwrap();
        prop_assert!(ap.norm() <= 1e-8);
        let eq = class_equivalent(&h, &base.representative().unwrap(), &p.representative().unwrap(), 1e-8).unwrap();
        prop_assert!(eq.equivalent);
        if p.positive {
            prop_assert!(p.anomaly_defect().unwrap() <= 1e-8);
        }
        let _ = Arc::clone(&p.cs);
    }
}
