//! End-to-end acceptance run. Prints one `criterion N: PASS/FAIL` line per
//! criterion and fails if any criterion fails.

use std::error::Error;
use std::process::Command;
use std::time::{Duration, Instant};

use hetsys_core::algebroid::{cocycle_check, MetricPair};
use hetsys_core::cohomology::{compute_group, partial_map, GroupKind};
use hetsys_core::gauge::{chern_path, csr_defect, donaldson_r, pontryagin, Bundle, Reduction};
use hetsys_core::hermitian::{psi_squared, HermitianStructure};
use hetsys_core::lie_exterior::Form;
use hetsys_core::linearization::{
    assemble_l, closed_forms_in_kernel, duality_check, ellipticity_scan, index_report,
    jacobian_check, rescaling_defect,
};
use hetsys_core::models::{self, CatalogEntry, ModelParams};
use hetsys_core::systems::{
    appendix_bridge, appendix_constants, appendix_to_hs, hs_to_appendix, twisted_hs_residual,
};
use hetsys_core::variation::{
    agreement, concave_path_residual, dilaton_functional, discrete_second_difference, fd_first,
    fd_second, generate_concave_path, variation_report, AppendixPath, ParamPath,
};
use hetsys_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), Box<dyn Error>>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+).into());
        }
    };
}

const W: C64 = C64 { re: 1.3, im: 0.2 };
const QUOTED_CONSTANT: f64 = std::f64::consts::SQRT_2;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn pair_of(e: &CatalogEntry) -> MetricPair {
    MetricPair::new(e.cs.clone(), e.omega.clone(), e.bundle.clone())
}

fn one_form(v: &[f64]) -> Form {
    Form::from_coeffs(v.len(), 1, v.iter().map(|&x| c(x)).collect()).unwrap()
}

fn random_one_form(rng: &mut ChaCha8Rng, dim: usize) -> Form {
    one_form(&(0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())
}

fn hopf_su2() -> CatalogEntry {
    models::hopf(W, 0.7, 0.6, 2.0)
        .unwrap()
        .with_bundle(models::hopf_su2_curved_bundle(W, C64::new(0.3, 0.2), [0.3, 0.5, 0.7], 0.4))
}

fn torus6_su2() -> CatalogEntry {
    let x = [C64::new(0.3, 0.1), C64::new(-0.2, 0.4), c(0.1)];
    models::torus(3, 1.0).unwrap().with_bundle(models::torus_su2_bundle(3, x))
}

fn hopf_closed_form(a: f64, x: f64, t: f64, v: f64) -> f64 {
    2.0 * (a * x * t).sqrt() * v
}

fn criterion_1() -> Outcome {
    let grid = [0.5, 1.0, 2.0];
    for &a in &grid {
        for &x in &grid {
            for &t in &grid {
                let e = models::hopf(c(x), a, t, 1.0)?;
                let h = e.hermitian()?;
                let lee = e.model.e(3).scale_re(-a / t);
                ensure!((h.lee_form() - &lee).norm_max() <= 1e-12, "Lee form at a={a} x={x} t={t}");
                let f = h.dilaton_function()?;
                ensure!((f - 0.5 * (a * t / (4.0 * x)).ln()).abs() <= 1e-12, "dilaton at a={a} x={x} t={t}");
                let top = e.model.top_coefficient(&e.mu)?;
                ensure!((top - c(4.0 * x)).norm() <= 1e-12, "top coefficient of mu at x={x}: {top}");
                let e2 = models::hopf(c(x), a, t, 2.0)?;
                let integral = e2.model.integrate_top(&e2.mu)? / 2.0;
                ensure!((integral - c(4.0 * x)).norm() <= 1e-12, "integral of mu at x={x}");
            }
        }
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    let m = |a: f64, x: f64, t: f64| -> Result<f64, Box<dyn Error>> {
        Ok(dilaton_functional(&models::hopf(c(x), a, t, 1.0)?.hermitian()?)?)
    };
    let grid = [0.5, 1.0, 2.0];
    for &a in &grid {
        for &x in &grid {
            for t in [0.1, 0.7, 3.0, 25.0] {
                let v = m(a, x, t)?;
                ensure!(agreement(v, hopf_closed_form(a, x, t, 1.0), 0.0) <= 1e-12, "closed form at a={a} x={x} t={t}");
                ensure!(agreement(m(a, x, 4.0 * t)?, 2.0 * v, 0.0) <= 1e-12, "scaling at a={a} x={x} t={t}");
            }
        }
    }
    for (lo, hi) in [(0.1, 10.0), (10.0, 1e3)] {
        let ts: Vec<f64> = (0..100).map(|k| lo + (hi - lo) * k as f64 / 99.0).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| m(1.0, 1.0, t)).collect::<Result<_, _>>()?;
        let d2 = discrete_second_difference(&ts, &vals);
        ensure!(d2.iter().all(|&d| d <= 1e-10), "second differences on [{lo}, {hi}]");
        ensure!(vals.windows(2).all(|w| w[1] > w[0]), "not increasing on [{lo}, {hi}]");
    }
    let derived = m(1.0, 1.0, 1.0)?;
    println!(
        "  M(t) = C sqrt(a x t) V with derived C = {derived}; quoted constant {QUOTED_CONSTANT} differs: {}",
        (derived - QUOTED_CONSTANT).abs() > 1e-12
    );
    Ok(())
}

fn criterion_3() -> Outcome {
    for &(x, a) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.3), (1.7, 1.1)] {
        let e = models::hopf(c(x), a, a / x, 1.0)?;
        let h = e.hermitian()?;
        let trivial = Bundle::trivial(e.bundle.algebra.clone(), 4);
        let r = twisted_hs_residual(&h, &e.normalized_psi()?, &trivial, true, None)?;
        ensure!(r.max_residual() <= 1e-10, "residuals at x={x} a={a}: {:?}", r);
    }
    let e = models::hopf(C64::new(1.0, 0.5), 1.0, 1.0, 1.0)?;
    let h = e.hermitian()?;
    let trivial = Bundle::trivial(e.bundle.algebra.clone(), 4);
    let r = twisted_hs_residual(&h, &e.normalized_psi()?, &trivial, true, None)?;
    let dpsi = r.get("dpsi").unwrap_or(0.0);
    ensure!(dpsi > 1e-6, "y != 0 should fail dpsi, got {dpsi}");
    Ok(())
}

fn criterion_4() -> Outcome {
    let e = hopf_su2();
    let h = e.hermitian()?;
    let alg = &e.bundle.algebra;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut ddc, mut cocycle, mut csr) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let s1: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s2: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let path = Reduction::from_compact(&s1).with_order(64);
        let r = donaldson_r(alg, &e.cs, &e.bundle.theta, &path)?;
        let th = chern_path(alg, &e.cs, &e.bundle.theta, &path.u, 1.0);
        let rhs = &pontryagin(alg, &e.model, &th)? - &pontryagin(alg, &e.model, &e.bundle.theta)?;
        ddc = ddc.max((&e.cs.ddc(&r) - &rhs).norm_max());
        let chk = cocycle_check(&h, &e.bundle, &path, &s2)?;
        cocycle = cocycle.max(chk.defect).max(chk.connection_mismatch);
        csr = csr.max(csr_defect(alg, &h, &e.bundle.theta, &path)?);
    }
    println!("  ddc {ddc:.2e}, cocycle {cocycle:.2e}, csr {csr:.2e}");
    ensure!(ddc <= 1e-8, "ddc defect {ddc:e}");
    ensure!(cocycle <= 1e-8, "cocycle defect {cocycle:e}");
    ensure!(csr <= 1e-8, "csr defect {csr:e}");
    Ok(())
}

fn criterion_5() -> Outcome {
    let cases = [models::torus(2, 1.0)?, torus6_su2(), models::hopf(W, 0.7, 0.6, 2.0)?, hopf_su2()];
    let labels = ["torus4", "torus6+su2", "hopf", "hopf+su2"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (e, label) in cases.iter().zip(labels) {
        let pair = pair_of(e);
        let dim = e.model.dim();
        let rank = e.bundle.algebra.rank();
        let (mut w1, mut w2) = (0.0f64, 0.0f64);
        for _ in 0..25 {
            let s: Vec<f64> = (0..rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xi = random_one_form(&mut rng, dim).scale_re(0.3);
            let mut path = ParamPath::linear(pair.clone(), e.mu.clone(), xi, Reduction::from_compact(&s));
            path.xi2 = random_one_form(&mut rng, dim).scale_re(0.3);
            let rep = variation_report(&path)?;
            w1 = w1.max(rep.first_rel_err);
            w2 = w2.max(rep.second_rel_err);
        }
        println!("  {label}: first {w1:.2e}, second {w2:.2e}");
        ensure!(w1 <= 1e-6 && w2 <= 1e-5, "{label}: first {w1:e}, second {w2:e}");
    }
    Ok(())
}

fn criterion_6() -> Outcome {
    let e = hopf_su2();
    let v = one_form(&[0.1, 0.4, -0.3, 0.0]);
    let z = one_form(&[1.0, 0.0, 0.0, 0.0]);
    let mut paths = Vec::new();
    for s in [[0.0; 3], [0.2, -0.3, 0.1], [-0.5, 0.1, 0.4]] {
        paths.push(generate_concave_path(&pair_of(&e), &e.mu, &v, &z, &Reduction::from_compact(&s), 0.5, 21)?);
    }
    let g = models::h3(1.0)?;
    let skewed = MetricPair::new(g.cs.clone(), &g.omega + &g.model.basis(&[2, 3]), g.bundle.clone());
    let rank = g.bundle.algebra.rank();
    paths.push(generate_concave_path(
        &skewed,
        &g.mu,
        &one_form(&[0.2, 0.0, 0.0, 0.0, 0.0, -0.1]),
        &one_form(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]),
        &Reduction::zero(rank),
        0.5,
        21,
    )?);
    for (k, p) in paths.iter().enumerate() {
        let res = p.residuals()?;
        ensure!(res.iter().all(|r| r.abs() <= 1e-8), "generated path {k} residual");
        ensure!(p.second_differences().iter().all(|&d| d <= 1e-9), "generated path {k} not concave");
    }

    // linear paths on the flat torus stay on the exact surface
    let t = models::torus(3, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let xi = random_one_form(&mut rng, 6).scale_re(0.2);
        let path = ParamPath::linear(pair_of(&t), t.mu.clone(), xi, Reduction::zero(3));
        let ts: Vec<f64> = (0..9).map(|k| k as f64 * 0.1).collect();
        let hs: Vec<HermitianStructure> = ts.iter().map(|&s| path.sample(s).map(|p| p.h)).collect::<Result<_, _>>()?;
        let res = concave_path_residual(&ts, &hs)?;
        ensure!(res.iter().all(|&r| r == 0.0), "flat torus residual {:?}", res);
        let vals: Vec<f64> = ts.iter().map(|&s| path.value_at(s)).collect::<Result<_, _>>()?;
        ensure!(discrete_second_difference(&ts, &vals).iter().all(|&d| d <= 1e-9), "flat torus not concave");
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let x = [C64::new(0.3, 0.1), C64::new(-0.2, 0.4), c(0.1)];
    let cases = [
        models::torus(2, 1.0)?.with_bundle(models::torus_flat_bundle(2, C64::new(0.4, 0.2))),
        models::torus(3, 1.0)?.with_bundle(models::torus_su2_bundle(3, x)),
        models::hopf(W, 0.7, 0.6, 2.0)?,
        hopf_su2(),
        models::h3(1.0)?,
    ];
    for e in &cases {
        let h = e.hermitian()?;
        let pair = pair_of(e);
        let jac = jacobian_check(&pair)?;
        ensure!(jac.rel_err <= 1e-6, "{}: Jacobian {:e}", e.name, jac.rel_err);
        let lin = assemble_l(&pair)?;
        ensure!(closed_forms_in_kernel(&lin, &h) <= 1e-12, "{}: closed forms", e.name);
        let scan = ellipticity_scan(&h, 200, 42)?;
        ensure!(scan.pass && scan.failures == 0, "{}: ellipticity {:?}", e.name, scan);
        for r in [1.0, 2.0, 10.0] {
            ensure!(rescaling_defect(&pair, r)? <= 1e-12, "{}: rescaling r = {r}", e.name);
        }
    }
    let t6 = models::torus(3, 1.0)?;
    let skew = &(&t6.omega.scale_re(2.5) + &t6.model.basis(&[0, 2]).scale_re(0.3)) + &t6.model.basis(&[1, 3]).scale_re(0.3);
    let kahler = [pair_of(&cases[0]), pair_of(&cases[1]), MetricPair::new(t6.cs.clone(), skew, t6.bundle.clone())];
    for (k, p) in kahler.iter().enumerate() {
        let d = duality_check(p)?;
        ensure!(d <= 1e-10, "duality on Kahler case {k}: {d:e}");
    }
    for e in &cases[..2] {
        let rep = index_report(&assemble_l(&pair_of(e))?, &e.hermitian()?)?;
        ensure!(rep.index == 0, "{}: index {}", e.name, rep.index);
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let dim = |h: &HermitianStructure, kind| compute_group(h, kind).map(|g| g.dim());
    let e = models::hopf(W, 0.7, 0.6, 2.0)?;
    let h = e.hermitian()?;
    ensure!(dim(&h, GroupKind::Aeppli(1, 1))? == 1, "Hopf Aeppli (1,1)");
    ensure!(dim(&h, GroupKind::Dolbeault(2, 1))? == 1, "Hopf Dolbeault (2,1)");
    let g = compute_group(&h, GroupKind::Aeppli(1, 1))?;
    let rep = &g.representatives(4)[0];
    let e41 = e.model.basis(&[3, 0]);
    let ratio = rep.coeff(&[0, 3]) / e41.coeff(&[0, 3]);
    ensure!((rep - &e41.scale(ratio)).norm_max() <= 1e-12, "Aeppli generator is not a multiple of e41");
    let p = partial_map(&h)?;
    ensure!(
        p.domain_dim == 1 && p.codomain_dim == 1 && p.image_dim == 1 && p.kernel_dim == 0,
        "Hopf partial map is not an isomorphism: {:?}",
        (p.domain_dim, p.codomain_dim, p.image_dim, p.kernel_dim)
    );
    for n in [2, 3] {
        let p = partial_map(&models::torus(n, 1.0)?.hermitian()?)?;
        ensure!(p.image_dim == 0, "torus n = {n}: partial map image {}", p.image_dim);
    }
    for name in models::CATALOG {
        let h = models::load(name, &ModelParams::default())?.hermitian()?;
        let p = partial_map(&h)?;
        ensure!(
            p.kernel_dim + p.image_dim == p.domain_dim && p.domain_dim == dim(&h, GroupKind::Aeppli(1, 1))?,
            "{name}: rank-nullity"
        );
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    let expected = [(3, 4.0, 1.0 / 3.0), (4, 3.0, 0.5), (5, 8.0 / 3.0, 3.0 / 5.0)];
    for (n, lambda, gamma) in expected {
        ensure!(appendix_constants(n)? == (lambda, gamma), "constants for n = {n}");
    }

    let x = [C64::new(0.3, 0.1), C64::new(-0.2, 0.4), c(0.1)];
    let e = models::torus(3, 1.0)?.with_bundle(models::torus_double_su2_bundle(3, x, 1.0));
    let rank = e.bundle.algebra.rank();
    let s: Vec<f64> = (0..rank).map(|i| 0.3 + 0.2 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.5 }).collect();
    let ap = AppendixPath {
        h: e.hermitian()?,
        base: e.bundle.clone(),
        tau0: Form::zero(6, 2),
        phi1: Form::zero(6, 2),
        phi2: Form::zero(6, 2),
        u: Reduction::from_compact(&s),
    };
    let d = ap.derivatives()?;
    let f1 = fd_first(|t| ap.value_at(t))?;
    let f2 = fd_second(|t| ap.value_at(t))?;
    let floor = 1e-3 * d.value.abs();
    let (e1, e2) = (agreement(d.first, f1.value, floor), agreement(d.second, f2.value, floor));
    println!("  hessian: first {e1:.2e}, second {e2:.2e}");
    ensure!(e1 <= 1e-5 && e2 <= 1e-5, "appendix hessian vs FD: {e1:e} / {e2:e}");

    for scale in [0.5, 1.0, 3.0] {
        let base = models::torus(3, 1.0)?.with_bundle(models::torus_flat_bundle(3, C64::new(0.3, 0.1)));
        let e = base.with_omega(base.omega.scale_re(scale));
        let mu = psi_squared(&e.psi, e.cs.n())?;
        let h = HermitianStructure::new(e.cs.clone(), e.omega.clone(), Some(mu))?;
        let bridge = appendix_bridge(&h, &e.bundle, &e.psi, None)?;
        ensure!(bridge.max_residual() <= 1e-8, "bridge residual at scale {scale}");
        let back = hs_to_appendix(&appendix_to_hs(&h)?, &e.psi)?;
        let trip = (back.omega() - h.omega()).norm_max();
        ensure!(trip <= 1e-8, "round trip at scale {scale}: {trip:e}");
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir()?;
    let runs: [Vec<&str>; 7] = [
        vec!["check", "--model", "hopf", "--w", "1", "--a", "1", "--system", "twisted-hs"],
        vec!["functional", "--model", "hopf", "--a", "1", "--x", "1", "--t", "0.1:10:100"],
        vec!["variation", "--model", "hopf", "--seed", "42"],
        vec!["path", "--model", "su2_r3"],
        vec!["linearize", "--model", "torus4"],
        vec!["cohomology", "--model", "h3"],
        vec!["symbol", "--model", "torus4", "--trials", "200", "--seed", "42"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let json = dir.path().join(format!("{k}_{rep}.json"));
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_hetsys"));
            cmd.args(args).arg("--json").arg(&json);
            let csv = dir.path().join(format!("{k}_{rep}.csv"));
            if args[0] == "functional" {
                cmd.arg("--csv").arg(&csv);
            }
            let out = cmd.output()?;
            let csv_bytes = if csv.exists() { std::fs::read(&csv)? } else { Vec::new() };
            outputs.push((out.status.code(), out.stdout, std::fs::read(&json)?, csv_bytes));
        }
        ensure!(outputs[0] == outputs[1], "`hetsys {}` is not reproducible", args.join(" "));
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(fn() -> Outcome, Duration); 10] = [
        (criterion_1, Duration::from_secs(1)),
        (criterion_2, Duration::from_secs(1)),
        (criterion_3, Duration::from_secs(1)),
        (criterion_4, Duration::from_secs(10)),
        (criterion_5, Duration::from_secs(60)),
        (criterion_6, Duration::from_secs(30)),
        (criterion_7, Duration::from_secs(60)),
        (criterion_8, Duration::from_secs(5)),
        (criterion_9, Duration::from_secs(60)),
        (criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (k, (run, limit)) in criteria.iter().enumerate() {
        let n = k + 1;
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let verdict = match result {
            Ok(()) if elapsed <= *limit => "PASS",
            Ok(()) => {
                println!("  runtime {:.2?} exceeds {:?}", elapsed, limit);
                "FAIL"
            }
            Err(err) => {
                println!("  {}", err);
                "FAIL"
            }
        };
        println!("criterion {n}: {verdict} ({:.2?})", elapsed);
        if verdict == "FAIL" {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
