//! String-class bookkeeping for Bott-Chern algebroids on invariant data.
//!
//! A class is represented by a pair `(H, θ)` with `dH + c(F_θ ∧ F_θ) = 0`.
//! Hermitian metrics are pairs `(ω, h)`, and `h = e^u h₀` is stored through
//! the Chern connection of the reduced bundle.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::cohomology::aeppli_image_residual;
use crate::gauge::{chern_path, chern_simons, compose_reductions, curvature, donaldson_r, Bundle, Reduction, VForm};
use crate::hermitian::{metric_of, ComplexStructure, HermitianStructure};
use crate::lie_exterior::Form;
use crate::linalg::{column_space, lstsq, CMat, CVec, RMat, C64, I};

/// Tolerance on `dH + c(F ∧ F)` at construction.
pub const CLASS_TOL: f64 = 1e-8;

/// `(H, θ)` with `dH + c(F_θ ∧ F_θ) = 0`.
#[derive(Clone, Debug)]
pub struct StringClassRep {
    pub h: Form,
    pub bundle: Bundle,
    defect: f64,
}

impl StringClassRep {
    pub fn new(cs: &ComplexStructure, h: Form, bundle: Bundle) -> Result<Self> {
        let model = cs.model();
        if h.degree() != 3 {
            return Err(Error::Degree {
                expected: 3,
                found: h.degree(),
            });
        }
        let off = &(&h - &cs.project(&h, 3, 0)) - &cs.project(&h, 2, 1);
        if off.norm_max() > 1e-10 * h.norm_max().max(1.0) {
            return Err(Error::Precondition(String::from(
                "H has components outside Ω^{3,0} ⊕ Ω^{2,1}",
            )));
        }
        let dh = if model.dim() > 3 { model.d(&h)? } else { Form::zero(model.dim(), 4) };
        let defect = (&dh + &bundle.pontryagin(model)?).norm_max();
        if defect > CLASS_TOL {
            return Err(Error::Precondition(format!(
                "dH + c(F ^ F) = {:.3e}",
                defect
            )));
        }
        Ok(StringClassRep { h, bundle, defect })
    }

    /// `(2i∂ω, θ)`.
    pub fn from_metric(cs: &ComplexStructure, omega: &Form, bundle: Bundle) -> Result<Self> {
        StringClassRep::new(cs, cs.del(omega).scale(I * 2.0), bundle)
    }

    /// `‖dH + c(F ∧ F)‖_max`.
    pub fn defect(&self) -> f64 {
        self.defect
    }
}

/// Outcome of [`class_equivalent`].
#[derive(Clone, Debug)]
pub struct Equivalence {
    pub equivalent: bool,
    /// L² norm of the part of the right-hand side outside `d Ω^{2,0}`.
    pub residual: f64,
    /// Minimal-norm `B ∈ Ω^{2,0}`.
    pub b: Form,
}

/// Whether `H₂ = H₁ + CS(θ₁) − CS(θ₂) − dc(θ₁ ∧ θ₂) + dB` for some `B ∈ Ω^{2,0}`.
pub fn class_equivalent(
    h: &HermitianStructure,
    r1: &StringClassRep,
    r2: &StringClassRep,
    tol: f64,
) -> Result<Equivalence> {
    let cs = h.complex_structure();
    let model = h.model();
    let alg = &r1.bundle.algebra;
    if alg.rank() != r2.bundle.algebra.rank() {
        return Err(Error::Dimension(String::from(
            "representatives live on different gauge algebras",
        )));
    }
    let (t1, t2) = (&r1.bundle.theta, &r2.bundle.theta);
    let mixed = model.d(&alg.c_wedge(t1, t2)?)?;
    let x = &(&(&r2.h - &r1.h) - &chern_simons(alg, model, t1)?)
        + &(&chern_simons(alg, model, t2)? + &mixed);
    let b20 = cs.pq_basis(2, 0);
    let img = model.d_matrix(2) * &b20;
    let (coef, residual) = h.project_onto(3, &img, &x.to_vec());
    let b = Form::from_vec(model.dim(), 2, &(&b20 * coef));
    let scale = h.l2_norm(&r1.h).max(h.l2_norm(&r2.h)).max(1.0);
    Ok(Equivalence {
        equivalent: residual <= tol * scale,
        residual,
        b,
    })
}

/// `(H + 2i∂β, θ)` for a `dd^c`-closed 2-form `β`.
pub fn twist(cs: &ComplexStructure, r: &StringClassRep, beta: &Form) -> Result<StringClassRep> {
    if beta.degree() != 2 {
        return Err(Error::Degree {
            expected: 2,
            found: beta.degree(),
        });
    }
    let ddc = cs.ddc(beta).norm_max();
    if ddc > 1e-10 {
        return Err(Error::Precondition(format!(
            "the twisting form is not dd^c-closed ({:.3e})",
            ddc
        )));
    }
    let h = &r.h + &cs.del(beta).scale(I * 2.0);
    StringClassRep::new(cs, h, r.bundle.clone())
}

/// A real `(1,1)`-form `τ` and `B ∈ Ω^{2,0}` with `H = 2i∂τ + dB`.
#[derive(Clone, Debug)]
pub struct BottChernFit {
    pub tau: Form,
    pub b: Form,
    pub residual: f64,
}

impl BottChernFit {
    pub fn is_bott_chern(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Real basis (columns) of the real `(1,1)`-forms.
pub fn real_11_basis(cs: &ComplexStructure) -> RMat {
    let b = cs.pq_basis(1, 1);
    let rows = b.nrows();
    let mut real = CMat::zeros(rows, 2 * b.ncols());
    for j in 0..b.ncols() {
        for i in 0..rows {
            real[(i, 2 * j)] = C64::new(b[(i, j)].re, 0.0);
            real[(i, 2 * j + 1)] = C64::new(b[(i, j)].im, 0.0);
        }
    }
    column_space(&real).map(|z| z.re)
}

/// Least-squares search for a Bott-Chern presentation of `H`.
pub fn bott_chern_fit(h: &HermitianStructure, r: &StringClassRep) -> BottChernFit {
    let cs = h.complex_structure();
    let model = h.model();
    let m = model.dim();
    let tb = real_11_basis(cs);
    let bb = cs.pq_basis(2, 0);
    let a_tau = cs.del_matrix(2) * tb.map(|x| C64::new(0.0, 2.0 * x));
    let a_b = model.d_matrix(2) * &bb;
    // Real unknowns: τ coefficients, Re B, Im B.
    let rows = a_tau.nrows();
    let (nt, nb) = (a_tau.ncols(), a_b.ncols());
    let mut a = CMat::zeros(2 * rows, nt + 2 * nb);
    let x = r.h.to_vec();
    let mut rhs = CVec::zeros(2 * rows);
    for i in 0..rows {
        for j in 0..nt {
            a[(i, j)] = C64::new(a_tau[(i, j)].re, 0.0);
            a[(rows + i, j)] = C64::new(a_tau[(i, j)].im, 0.0);
        }
        for j in 0..nb {
            let z = a_b[(i, j)];
            a[(i, nt + j)] = C64::new(z.re, 0.0);
            a[(i, nt + nb + j)] = C64::new(-z.im, 0.0);
            a[(rows + i, nt + j)] = C64::new(z.im, 0.0);
            a[(rows + i, nt + nb + j)] = C64::new(z.re, 0.0);
        }
        rhs[i] = C64::new(x[i].re, 0.0);
        rhs[rows + i] = C64::new(x[i].im, 0.0);
    }
    let sol = lstsq(&a, &rhs);
    let tc = CVec::from_iterator(nt, (0..nt).map(|j| sol[j]));
    let bc = CVec::from_iterator(nb, (0..nb).map(|j| C64::new(sol[nt + j].re, sol[nt + nb + j].re)));
    let tau = Form::from_vec(m, 2, &(tb.map(|x| C64::new(x, 0.0)) * tc));
    let b = Form::from_vec(m, 2, &(&bb * bc));
    let fitted = &cs.del(&tau).scale(I * 2.0) + &model.d(&b).unwrap_or_else(|_| Form::zero(m, 3));
    let residual = h.l2_norm(&(&r.h - &fitted));
    BottChernFit { tau, b, residual }
}

/// Best smallest metric eigenvalue over the real Aeppli class of `τ`,
/// by projected subgradient ascent on `τ + 2(dξ)^{1,1}`.
pub fn aeppli_class_margin(cs: &ComplexStructure, tau: &Form, iterations: usize) -> f64 {
    let model = cs.model();
    let m = model.dim();
    let dirs: Vec<Form> = (0..m)
        .map(|k| cs.project(&model.d(&Form::e(m, k)).expect("degree 1"), 1, 1).scale_re(2.0))
        .filter(|f| f.norm_max() > 1e-14)
        .collect();
    let tau = tau.re();
    let scale = tau.norm_max().max(1.0);
    let bound = 1e3 * scale;
    let lam_at = |c: &[f64]| -> (f64, RMat) {
        let mut w = tau.clone();
        for (ci, d) in c.iter().zip(&dirs) {
            w += &d.scale_re(*ci);
        }
        let g = metric_of(cs, &w);
        let sym = (&g + g.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let (idx, val) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let v = eig.eigenvectors.column(idx).into_owned();
        let vt = v.transpose();
        (val, v * vt)
    };
    let mut c = vec![0.0; dirs.len()];
    let (mut best, _) = lam_at(&c);
    if dirs.is_empty() {
        return best;
    }
    let grads: Vec<RMat> = dirs.iter().map(|d| metric_of(cs, d)).collect();
    for it in 0..iterations {
        let (val, proj) = lam_at(&c);
        best = best.max(val);
        let g: Vec<f64> = grads.iter().map(|gd| (gd.component_mul(&proj)).sum()).collect();
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-300 {
            break;
        }
        let step = scale / ((it + 1) as f64).sqrt();
        for (ci, gi) in c.iter_mut().zip(&g) {
            *ci = (*ci + step * gi / gn).clamp(-bound, bound);
        }
    }
    best.max(lam_at(&c).0)
}

/// Whether the real Aeppli class of `τ` contains a positive form.
pub fn aeppli_class_positive(cs: &ComplexStructure, tau: &Form) -> bool {
    aeppli_class_margin(cs, tau, 2000) > 0.0
}

/// A Hermitian metric `(ω, h)`; `h` enters through the Chern connection of `bundle`.
#[derive(Clone, Debug)]
pub struct MetricPair {
    pub cs: Arc<ComplexStructure>,
    pub omega: Form,
    pub bundle: Bundle,
    pub positive: bool,
}

impl MetricPair {
    pub fn new(cs: Arc<ComplexStructure>, omega: Form, bundle: Bundle) -> Self {
        let positive = HermitianStructure::new(cs.clone(), omega.clone(), None).is_ok();
        MetricPair {
            cs,
            omega,
            bundle,
            positive,
        }
    }

    pub fn hermitian(&self, mu: &Form) -> Result<HermitianStructure> {
        HermitianStructure::new(self.cs.clone(), self.omega.clone(), Some(mu.clone()))
    }

    /// `(2i∂ω, θ^h)`.
    pub fn representative(&self) -> Result<StringClassRep> {
        StringClassRep::from_metric(&self.cs, &self.omega, self.bundle.clone())
    }

    /// `‖dd^cω − c(F_h ∧ F_h)‖_max`.
    pub fn anomaly_defect(&self) -> Result<f64> {
        let p = self.bundle.pontryagin(self.cs.model())?;
        Ok((&self.cs.ddc(&self.omega) - &p).norm_max())
    }
}

/// `ω = ω₀ + 2(dξ)^{1,1} + R̃(h, h₀)` with `h = e^u h₀`.
pub fn metric_from_parameters(base: &MetricPair, xi: &Form, path: &Reduction) -> Result<MetricPair> {
    let cs = &base.cs;
    let model = cs.model();
    if xi.degree() != 1 {
        return Err(Error::Degree {
            expected: 1,
            found: xi.degree(),
        });
    }
    if xi.imag_max() > 1e-12 * xi.norm_max().max(1.0) {
        return Err(Error::Precondition(String::from("xi must be real")));
    }
    let alg = &base.bundle.algebra;
    let dxi = cs.project(&model.d(&xi.re())?, 1, 1).scale_re(2.0);
    let mut omega = &base.omega + &dxi;
    if path.u.iter().any(|z| z.norm() != 0.0) {
        omega += &donaldson_r(alg, cs, &base.bundle.theta, path)?;
    }
    let bundle = base.bundle.reduced(cs, path);
    Ok(MetricPair::new(cs.clone(), omega.re(), bundle))
}

/// Image of a kernel section under `∂̄_Q`.
#[derive(Clone, Debug)]
pub struct KernelSectionImage {
    /// `∂̄^θ r`, an `ad`-valued `(0,1)`-form.
    pub gauge: VForm,
    /// `∂̄ξ_Q + 2c(F^{1,1}, r)`, a `(1,1)`-form.
    pub form: Form,
}

impl KernelSectionImage {
    pub fn norm_max(&self) -> f64 {
        self.gauge.norm_max().max(self.form.norm_max())
    }
}

/// `∂̄_Q(r + ξ_Q)` for the section `r = −s/4`, `ξ_Q = 2ξ^{1,0}` attached to `(ξ, s)`.
pub fn dbar_kernel_section(
    cs: &ComplexStructure,
    r: &StringClassRep,
    s: &[f64],
    xi: &Form,
) -> Result<KernelSectionImage> {
    let alg = &r.bundle.algebra;
    if s.len() != alg.rank() {
        return Err(Error::Dimension(format!(
            "generator has {} entries, algebra has rank {}",
            s.len(),
            alg.rank()
        )));
    }
    let rv: Vec<C64> = s.iter().map(|&x| C64::new(-0.25 * x, 0.0)).collect();
    let theta = &r.bundle.theta;
    let gauge = alg.bracket_const(&theta.project(cs, 0, 1), &rv);
    let xi_q = cs.project(xi, 1, 0).scale_re(2.0);
    let f11 = curvature(alg, cs.model(), theta)?.project(cs, 1, 1);
    let form = &cs.delbar(&xi_q) + &alg.c_with(&rv, &f11).scale_re(2.0);
    Ok(KernelSectionImage { gauge, form })
}

/// Cocycle data for `h₁ = e^{u₁}h₀` and `h₂ = e^{u₂′}h₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct CocycleCheck {
    /// Distance of `R̃(h₂,h₀) − R̃(h₂,h₁) − R̃(h₁,h₀)` from `Im ∂ + Im ∂̄`.
    pub defect: f64,
    /// `‖θ^{h₂}‖` computed in two steps minus computed directly.
    pub connection_mismatch: f64,
}

pub fn cocycle_check(h: &HermitianStructure, bundle: &Bundle, u1: &Reduction, s2: &[f64]) -> Result<CocycleCheck> {
    let alg = &bundle.algebra;
    let cs = h.complex_structure();
    let (u2, u3) = compose_reductions(alg, u1, s2)?;
    let theta1 = chern_path(alg, cs, &bundle.theta, &u1.u, 1.0);
    let two_step = chern_path(alg, cs, &theta1, &u2.u, 1.0);
    let direct = chern_path(alg, cs, &bundle.theta, &u3.u, 1.0);
    let r10 = donaldson_r(alg, cs, &bundle.theta, u1)?;
    let r21 = donaldson_r(alg, cs, &theta1, &u2)?;
    let r20 = donaldson_r(alg, cs, &bundle.theta, &u3)?;
    let x = &(&r20 - &r21) - &r10;
    Ok(CocycleCheck {
        defect: aeppli_image_residual(h, &x, 1, 1),
        connection_mismatch: (&two_step - &direct).norm_max(),
    })
}
