//! Invariant cohomology through harmonic representatives.
//!
//! A class space is realized as `ker A ∩ (Im B)^⊥`, orthogonality taken with
//! the Gram matrices of a Hermitian structure.

use std::fmt;

use crate::error::{Error, Result};
use crate::gauge::{chern_path, donaldson_r, pontryagin, GaugeAlgebra, Reduction, VForm};
use crate::hermitian::{ComplexStructure, HermitianStructure};
use crate::lie_exterior::{wedge_matrix, Form, LieModel};
use crate::linalg::{column_space, hcat, vcat, inverse_hpd, null_space, rank, CMat, CVec, RMat, C64};

/// Which cohomology to compute.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    DeRham(usize),
    Dolbeault(usize, usize),
    Aeppli(usize, usize),
    BottChern(usize, usize),
    /// `d − θ∧` in degree `k`.
    MorseNovikov(usize, Form),
    /// Degree `k` of `Ω^{≤•}`, i.e. `⊕_{j≤k} Ω^{j+2,k−j}`.
    StringComplex(usize),
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::DeRham(k) => write!(f, "H^{}_dR", k),
            GroupKind::Dolbeault(p, q) => write!(f, "H^{{{},{}}}_dbar", p, q),
            GroupKind::Aeppli(p, q) => write!(f, "H^{{{},{}}}_A", p, q),
            GroupKind::BottChern(p, q) => write!(f, "H^{{{},{}}}_BC", p, q),
            GroupKind::MorseNovikov(k, _) => write!(f, "H^{}_(d-theta)", k),
            GroupKind::StringComplex(k) => write!(f, "H^{}(Omega^<=)", k),
        }
    }
}

/// Harmonic representatives of a cohomology space.
#[derive(Clone, Debug)]
pub struct CohomologyGroup {
    pub kind: GroupKind,
    /// Form degree of the representatives.
    pub degree: usize,
    /// Coefficient vectors of the representatives, one per column.
    pub basis: CMat,
    /// Gram matrix of the representatives.
    pub gram: CMat,
}

impl CohomologyGroup {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn representatives(&self, dim: usize) -> Vec<Form> {
        (0..self.dim())
            .map(|j| Form::from_vec(dim, self.degree, &self.basis.column(j).into_owned()))
            .collect()
    }

    /// Coordinates of the orthogonal projection of `x` onto the harmonic space.
    pub fn coordinates(&self, h: &HermitianStructure, x: &Form) -> CVec {
        if self.dim() == 0 {
            return CVec::zeros(0);
        }
        let g = h.gram(self.degree);
        let rhs = self.basis.adjoint() * (g * x.to_vec());
        inverse_hpd(&self.gram) * rhs
    }
}

fn normalized(a: CMat) -> CMat {
    let s = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if s > 0.0 {
        a / C64::new(s, 0.0)
    } else {
        a
    }
}

/// Basis (columns) of `ker A ∩ (Im B)^⊥` inside the span of the columns of `dom`.
fn harmonic(h: &HermitianStructure, k: usize, dom: &CMat, a: &CMat, b: &CMat) -> CMat {
    if dom.ncols() == 0 {
        return CMat::zeros(dom.nrows(), 0);
    }
    let g = h.gram(k);
    let top = normalized(a * dom);
    let bot = normalized(b.adjoint() * g * dom);
    let mut stacked = CMat::zeros(top.nrows() + bot.nrows(), dom.ncols());
    stacked.view_mut((0, 0), top.shape()).copy_from(&top);
    stacked.view_mut((top.nrows(), 0), bot.shape()).copy_from(&bot);
    let null = null_space(&stacked);
    let mut basis = dom * null;
    // fix phases so that each representative has a real largest entry
    for j in 0..basis.ncols() {
        let (mut best, mut arg) = (0.0, C64::new(1.0, 0.0));
        for z in basis.column(j).iter() {
            if z.norm() > best + 1e-12 {
                best = z.norm();
                arg = *z / z.norm();
            }
        }
        let phase = arg.conj();
        for z in basis.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    basis
}

fn empty(rows: usize) -> CMat {
    CMat::zeros(rows, 0)
}

fn d_or_zero(model: &LieModel, k: usize) -> CMat {
    let m = model.dim();
    if k < m {
        model.d_matrix(k).clone()
    } else {
        CMat::zeros(0, crate::linalg::binomial(m, k))
    }
}

fn del_or_zero(cs: &ComplexStructure, k: usize, bar: bool) -> CMat {
    let m = cs.model().dim();
    if k < m {
        if bar {
            cs.delbar_matrix(k).clone()
        } else {
            cs.del_matrix(k).clone()
        }
    } else {
        CMat::zeros(0, crate::linalg::binomial(m, k))
    }
}

/// Basis of `⊕_{p ≥ 2} Ω^{p, k+2−p}`.
pub fn string_complex_basis(cs: &ComplexStructure, k: usize) -> CMat {
    let deg = k + 2;
    let size = crate::linalg::binomial(cs.model().dim(), deg);
    let mut p = CMat::zeros(size, size);
    for pp in 2..=deg {
        if let Some(pr) = cs.projector(pp, deg - pp) {
            p += pr;
        }
    }
    column_space(&p)
}

fn pq(cs: &ComplexStructure, p: isize, q: isize) -> Option<CMat> {
    if p < 0 || q < 0 {
        return None;
    }
    let b = cs.pq_basis(p as usize, q as usize);
    Some(b)
}

/// Harmonic representatives for `kind`.
pub fn compute_group(h: &HermitianStructure, kind: GroupKind) -> Result<CohomologyGroup> {
    let cs = h.complex_structure();
    let model = h.model();
    let m = model.dim();
    let n = cs.n();
    let (degree, dom, a, b) = match &kind {
        GroupKind::DeRham(k) => {
            let k = *k;
            if k > m {
                return Err(Error::DegreeOverflow { degree: k, dim: m });
            }
            let size = crate::linalg::binomial(m, k);
            let b = if k == 0 { empty(1) } else { model.d_matrix(k - 1).clone() };
            (k, CMat::identity(size, size), d_or_zero(model, k), b)
        }
        GroupKind::MorseNovikov(k, theta) => {
            let k = *k;
            if k > m {
                return Err(Error::DegreeOverflow { degree: k, dim: m });
            }
            let size = crate::linalg::binomial(m, k);
            let a = morse_novikov_matrix(model, theta, k)?;
            let b = if k == 0 {
                empty(1)
            } else {
                morse_novikov_matrix(model, theta, k - 1)?
            };
            (k, CMat::identity(size, size), a, b)
        }
        GroupKind::Dolbeault(p, q) | GroupKind::Aeppli(p, q) | GroupKind::BottChern(p, q) => {
            let (p, q) = (*p, *q);
            if p > n || q > n {
                return Err(Error::Degree {
                    expected: n,
                    found: p.max(q),
                });
            }
            let k = p + q;
            let dom = cs.pq_basis(p, q);
            let rows = dom.nrows();
            let (pi, qi) = (p as isize, q as isize);
            match &kind {
                GroupKind::Dolbeault(..) => {
                    let a = del_or_zero(cs, k, true);
                    let b = match pq(cs, pi, qi - 1) {
                        Some(src) => cs.delbar_matrix(k - 1) * src,
                        None => empty(rows),
                    };
                    (k, dom, a, b)
                }
                GroupKind::Aeppli(..) => {
                    let a = if k + 1 < m {
                        cs.del_matrix(k + 1) * cs.delbar_matrix(k)
                    } else {
                        CMat::zeros(0, rows)
                    };
                    let mut cols: Vec<CMat> = Vec::new();
                    if let Some(src) = pq(cs, pi - 1, qi) {
                        cols.push(cs.del_matrix(k - 1) * src);
                    }
                    if let Some(src) = pq(cs, pi, qi - 1) {
                        cols.push(cs.delbar_matrix(k - 1) * src);
                    }
                    (k, dom, a, hcat(rows, &cols))
                }
                _ => {
                    let d1 = del_or_zero(cs, k, false);
                    let d2 = del_or_zero(cs, k, true);
                    let a = vcat(&[d1, d2]);
                    let b = match pq(cs, pi - 1, qi - 1) {
                        Some(src) => cs.del_matrix(k - 1) * cs.delbar_matrix(k - 2) * src,
                        None => empty(rows),
                    };
                    (k, dom, a, b)
                }
            }
        }
        GroupKind::StringComplex(k) => {
            let k = *k;
            let deg = k + 2;
            if deg > m {
                return Err(Error::DegreeOverflow { degree: deg, dim: m });
            }
            let dom = string_complex_basis(cs, k);
            let a = d_or_zero(model, deg);
            let b = if k == 0 {
                empty(dom.nrows())
            } else {
                model.d_matrix(deg - 1) * string_complex_basis(cs, k - 1)
            };
            (deg, dom, a, b)
        }
    };
    let basis = harmonic(h, degree, &dom, &a, &b);
    let gram = basis.adjoint() * h.gram(degree) * &basis;
    Ok(CohomologyGroup {
        kind,
        degree,
        basis,
        gram,
    })
}

/// Matrix of `d − θ∧` from degree `k`. Requires `dθ = 0`.
pub fn morse_novikov_matrix(model: &LieModel, theta: &Form, k: usize) -> Result<CMat> {
    if theta.degree() != 1 {
        return Err(Error::Degree {
            expected: 1,
            found: theta.degree(),
        });
    }
    let dt = model.d(theta)?;
    if dt.norm_max() > 1e-12 * theta.norm_max().max(1.0) {
        return Err(Error::Precondition(format!(
            "theta is not closed (|d theta| = {:.3e})",
            dt.norm_max()
        )));
    }
    if k >= model.dim() {
        return Ok(d_or_zero(model, k));
    }
    Ok(d_or_zero(model, k) - wedge_matrix(theta, k)?)
}

/// Largest entry of `(d − θ)²` over all degrees.
pub fn morse_novikov_square_defect(model: &LieModel, theta: &Form) -> Result<f64> {
    let m = model.dim();
    let mut worst = 0.0f64;
    for k in 0..m.saturating_sub(1) {
        let a = morse_novikov_matrix(model, theta, k)?;
        let b = morse_novikov_matrix(model, theta, k + 1)?;
        worst = worst.max(crate::linalg::max_abs(&(b * a)));
    }
    Ok(worst)
}

/// L² distance of a `(p,q)`-form from `Im ∂ + Im ∂̄`.
pub fn aeppli_image_residual(h: &HermitianStructure, x: &Form, p: usize, q: usize) -> f64 {
    let cs = h.complex_structure();
    let k = p + q;
    let rows = x.to_vec().len();
    let mut cols = Vec::new();
    if p > 0 {
        cols.push(cs.del_matrix(k - 1) * cs.pq_basis(p - 1, q));
    }
    if q > 0 {
        cols.push(cs.delbar_matrix(k - 1) * cs.pq_basis(p, q - 1));
    }
    let img = hcat(rows, &cols);
    h.project_onto(k, &img, &x.to_vec()).1
}

/// Real-linear map `[τ] ↦ [2i∂τ]` from `H^{1,1}_A(ℝ)` to `H¹(Ω^{≤•})`.
#[derive(Clone, Debug)]
pub struct PartialMap {
    /// Real basis of `H^{1,1}_A(ℝ)` (columns).
    pub domain_basis: CMat,
    /// Coordinates of the images in the harmonic basis of `H¹(Ω^{≤•})`, one column per domain vector.
    pub matrix: CMat,
    pub domain_dim: usize,
    pub codomain_dim: usize,
    /// Real rank.
    pub image_dim: usize,
    pub kernel_dim: usize,
}

/// Real basis of the real points of a conjugation-invariant subspace.
fn real_basis(b: &CMat) -> CMat {
    let rows = b.nrows();
    let mut real = RMat::zeros(rows, 2 * b.ncols());
    for j in 0..b.ncols() {
        for i in 0..rows {
            real[(i, 2 * j)] = b[(i, j)].re;
            real[(i, 2 * j + 1)] = b[(i, j)].im;
        }
    }
    column_space(&real.map(|x| C64::new(x, 0.0))).map(|z| C64::new(z.re, 0.0))
}

pub fn partial_map(h: &HermitianStructure) -> Result<PartialMap> {
    let cs = h.complex_structure();
    let a11 = compute_group(h, GroupKind::Aeppli(1, 1))?;
    let target = compute_group(h, GroupKind::StringComplex(1))?;
    let dom = real_basis(&a11.basis);
    let mut matrix = CMat::zeros(target.dim(), dom.ncols());
    let dim = h.dim();
    for j in 0..dom.ncols() {
        let tau = Form::from_vec(dim, 2, &dom.column(j).into_owned());
        let img = cs.del(&tau).scale(C64::new(0.0, 2.0));
        matrix.set_column(j, &target.coordinates(h, &img));
    }
    let mut stacked = CMat::zeros(2 * matrix.nrows(), matrix.ncols());
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            stacked[(i, j)] = C64::new(matrix[(i, j)].re, 0.0);
            stacked[(matrix.nrows() + i, j)] = C64::new(matrix[(i, j)].im, 0.0);
        }
    }
    let image_dim = if matrix.nrows() == 0 || matrix.ncols() == 0 {
        0
    } else {
        rank(&stacked)
    };
    Ok(PartialMap {
        domain_dim: dom.ncols(),
        codomain_dim: target.dim(),
        kernel_dim: dom.ncols() - image_dim,
        image_dim,
        domain_basis: dom,
        matrix,
    })
}

/// Aeppli class of `τ − τ₀ − R̃(h, h₀)` in `H^{1,1}_A`.
#[derive(Clone, Debug)]
pub struct AeppliClass {
    pub coords: CVec,
    /// `‖dd^c x‖` of the representative.
    pub closure_defect: f64,
}

impl AeppliClass {
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// Whether the coordinates are real (conjugation-invariant class).
    pub fn is_real(&self, tol: f64) -> bool {
        self.coords.iter().all(|z| z.im.abs() <= tol)
    }
}

/// `Ap(τ, h, τ₀, h₀) = [τ − τ₀ − R̃(h, h₀)]`, with `h = e^u h₀`.
pub fn aeppli_class_of(
    h: &HermitianStructure,
    alg: &GaugeAlgebra,
    tau: &Form,
    path: &Reduction,
    tau0: &Form,
    theta0: &VForm,
) -> Result<AeppliClass> {
    let cs = h.complex_structure();
    let model = h.model();
    let theta = chern_path(alg, cs, theta0, &path.u, 1.0);
    for (name, t, th) in [("tau", tau, &theta), ("tau0", tau0, theta0)] {
        let defect = (&cs.ddc(t) - &pontryagin(alg, model, th)?).norm_max();
        if defect > 1e-8 {
            return Err(Error::Precondition(format!(
                "dd^c {} = c(F ^ F) fails by {:.3e}",
                name, defect
            )));
        }
    }
    let r = donaldson_r(alg, cs, theta0, path)?;
    let x = &(tau - tau0) - &r;
    let group = compute_group(h, GroupKind::Aeppli(1, 1))?;
    Ok(AeppliClass {
        coords: group.coordinates(h, &x),
        closure_defect: cs.ddc(&x).norm_max(),
    })
}

/// `∫ a ∧ b` for forms of complementary degree.
pub fn cup_integrate(model: &LieModel, a: &Form, b: &Form) -> Result<C64> {
    if a.degree() + b.degree() != model.dim() {
        return Err(Error::Degree {
            expected: model.dim() - a.degree(),
            found: b.degree(),
        });
    }
    model.integrate_top(&a.wedge(b)?)
}
