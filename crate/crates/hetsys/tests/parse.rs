use std::path::PathBuf;

use hetsys::error::CliError;
use hetsys::parse::{parse_bundle, parse_form, parse_model, read_bundle, read_model};
use hetsys_core::gauge::GaugeAlgebra;
use hetsys_core::linalg::max_abs;
use hetsys_core::models;
use hetsys_core::systems::{hs_residual, twisted_hs_residual};
use hetsys_core::C64;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn parse_error_line(r: Result<impl std::fmt::Debug, CliError>) -> usize {
    match r {
        Err(CliError::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {:?}", other),
    }
}

#[test]
fn form_syntax() {
    let f = parse_form("2 e^{12} - (1+i) e^{34} + 1/2*e13", 4, 2).unwrap();
    assert_eq!(f.coeff(&[0, 1]), c(2.0));
    assert_eq!(f.coeff(&[2, 3]), C64::new(-1.0, -1.0));
    assert_eq!(f.coeff(&[0, 2]), c(0.5));
    // reversed indices pick up the permutation sign
    let g = parse_form("e^{21}", 4, 2).unwrap();
    assert_eq!(g.coeff(&[0, 1]), c(-1.0));
    let h = parse_form("1e-3 e^1 + 2i e^2 - e^{3}", 3, 1).unwrap();
    assert_eq!(h.coeffs(), &[c(1e-3), C64::new(0.0, 2.0), c(-1.0)]);
    let wide = parse_form("e^{1,10} - 3 e^{2,11}", 12, 2).unwrap();
    assert_eq!(wide.coeff(&[0, 9]), c(1.0));
    assert_eq!(wide.coeff(&[1, 10]), c(-3.0));
    assert_eq!(parse_form("0", 4, 2).unwrap().norm_max(), 0.0);

    assert!(parse_form("e^{12}", 4, 1).is_err());
    assert!(parse_form("e^{15}", 4, 2).is_err());
    assert!(parse_form("e^{11}", 4, 2).is_err());
    assert!(parse_form("e^{0}", 4, 1).is_err());
    assert!(parse_form("x e^1", 4, 1).is_err());
}

#[test]
fn hopf_file_matches_the_catalog() {
    let file = read_model(&data("hopf.model")).unwrap();
    let cat = models::hopf(c(1.0), 1.0, 1.0, 1.0).unwrap();
    assert_eq!(file.name, "hopf");
    for k in 0..4 {
        assert_eq!(file.model.structure()[k], cat.model.structure()[k]);
    }
    assert_eq!(file.model.orientation(), cat.model.orientation());
    assert_eq!(file.cs.jc(), cat.cs.jc());
    assert_eq!(file.omega, cat.omega);
    let h = file.hermitian().unwrap();
    let r = twisted_hs_residual(&h, &file.normalized_psi().unwrap(), &file.bundle, true, None).unwrap();
    assert!(r.pass, "{:?}", r);
    // default Ψ spans the same line as the catalog one
    let ratio = file.psi.coeff(&[0, 1]) / cat.psi.coeff(&[0, 1]);
    assert!((&file.psi - &cat.psi.scale(ratio)).norm_max() < 1e-14);
}

#[test]
fn non_balanced_file_model() {
    let e = read_model(&data("h3_skewed.model")).unwrap();
    let h = e.hermitian().unwrap();
    let r = hs_residual(&h, &e.psi, &e.bundle, None).unwrap();
    assert!(!r.pass);
    assert!(r.get("conformally_balanced").unwrap() > 1e-3);
}

#[test]
fn model_file_errors_carry_line_numbers() {
    let base = "de1 = 0\nde2 = 0\nde3 = 0\nde4 = 0\nJ e1 = e2\nJ e2 = -e1\nJ e3 = e4\nJ e4 = -e3\nomega = e12 + e34\n";
    assert!(parse_model(base, "m").is_ok());
    assert_eq!(parse_error_line(parse_model(&base.replace("de2 = 0", "de2 = e15"), "m")), 2);
    assert_eq!(parse_error_line(parse_model(&format!("{}colour = red\n", base), "m")), 10);
    assert_eq!(parse_error_line(parse_model(&base.replace("J e2 = -e1", "J e2 = -e1 + 2"), "m")), 6);
    assert_eq!(parse_error_line(parse_model(&base.replace("omega = e12 + e34\n", ""), "m")), 0);
    assert_eq!(parse_error_line(parse_model("de1 = 0\nde3 = 0\n", "m")), 0);
    assert_eq!(parse_error_line(parse_model("de1 = 0\nde2 = 0\nJ e1 = e2\nJ e2 = -e1\nomega = e12\n", "m")), 0);
    assert!(matches!(
        parse_model(&base.replace("J e2 = -e1", "J e2 = e1"), "m"),
        Err(CliError::Engine(_))
    ));
    // Jacobi identity fails
    let bad = "de1 = e34\nde2 = 0\nde3 = e12\nde4 = 0\n";
    assert!(matches!(parse_model(bad, "m"), Err(CliError::Engine(_))));
}

#[test]
fn bundle_file_matches_the_catalog_connection() {
    let b = read_bundle(&data("su2_flat.bundle"), 4).unwrap();
    let cat = models::torus_flat_bundle(2, C64::new(0.4, 0.2));
    let su2 = GaugeAlgebra::su2(1.0);
    for k in 0..3 {
        assert_eq!(b.algebra.structure()[k], su2.structure()[k]);
        assert!((b.theta.comp(k) - cat.theta.comp(k)).norm_max() < 1e-15);
    }
    assert!(max_abs(&(b.algebra.pairing() - su2.pairing())) == 0.0);
    let t = models::torus(2, 1.0).unwrap();
    assert!(b.curvature(&t.model).unwrap().norm_max() < 1e-15);
}

#[test]
fn bundle_presets_and_errors() {
    let b = parse_bundle("algebra = su2+su2 2\ntheta1 = e1\n", 4, "b").unwrap();
    assert_eq!(b.algebra.rank(), 6);
    assert_eq!(b.theta.comp(0).coeff(&[0]), c(1.0));
    assert_eq!(parse_error_line(parse_bundle("rank = 2\n[T1,T3] = T1\n", 4, "b")), 2);
    assert_eq!(parse_error_line(parse_bundle("rank = 1\ntheta1 = e^{12}\n", 4, "b")), 2);
    assert_eq!(parse_error_line(parse_bundle("theta1 = e1\n", 4, "b")), 0);
    assert_eq!(parse_error_line(parse_bundle("algebra = so3\n", 4, "b")), 1);
    // bracket without an invariant pairing
    let r = parse_bundle("rank = 3\n[T1,T2] = T3\n[T2,T3] = T1\n[T3,T1] = T2\nc(T1,T1) = 1\n", 4, "b");
    assert!(matches!(r, Err(CliError::Engine(_))));
}
