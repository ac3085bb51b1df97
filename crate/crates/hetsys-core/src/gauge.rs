//! Quadratic Lie algebras, invariant connections and their secondary invariants.
//!
//! A connection is a 𝔤-valued 1-form stored by its components in a fixed
//! basis `T_a` of the compact form 𝔨, so conjugating coefficients is the
//! real structure of 𝔤 = 𝔨 ⊗ ℂ.

use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::hermitian::{ComplexStructure, HermitianStructure};
use crate::lie_exterior::{Form, LieModel};
use crate::linalg::{expm, max_abs, CMat, CVec, C64, I, ZERO};
use crate::quadrature::gauss_legendre;

/// Default number of Gauss-Legendre nodes for `R̃`.
pub const DEFAULT_QUAD_ORDER: usize = 64;

/// `(𝔤, c)` with `[T_a, T_b] = Σ_c f[c][(a, b)] T_c` and `c(T_a, T_b) = pairing[(a, b)]`.
#[derive(Clone, Debug)]
pub struct GaugeAlgebra {
    name: String,
    f: Vec<CMat>,
    pairing: CMat,
}

impl GaugeAlgebra {
    pub fn new(name: &str, f: Vec<CMat>, pairing: CMat) -> Result<Self> {
        let r = f.len();
        if pairing.nrows() != r || pairing.ncols() != r || f.iter().any(|m| m.shape() != (r, r)) {
            return Err(Error::Dimension(format!(
                "gauge algebra of rank {} with mismatched tables",
                r
            )));
        }
        let alg = GaugeAlgebra {
            name: String::from(name),
            f,
            pairing,
        };
        let scale = alg.f.iter().map(max_abs).fold(1.0, f64::max);
        let cs = max_abs(&alg.pairing).max(1.0);
        for c in 0..r {
            if max_abs(&(&alg.f[c] + alg.f[c].transpose())) > 1e-12 * scale {
                return Err(Error::InvalidModel(String::from("bracket is not antisymmetric")));
            }
        }
        if max_abs(&(&alg.pairing - alg.pairing.transpose())) > 1e-12 * cs {
            return Err(Error::InvalidModel(String::from("c is not symmetric")));
        }
        let jac = alg.jacobi_defect();
        if jac > 1e-12 * scale * scale {
            return Err(Error::InvalidModel(format!("Jacobi identity fails by {:.3e}", jac)));
        }
        let inv = alg.invariance_defect();
        if inv > 1e-12 * scale * cs {
            return Err(Error::InvalidModel(format!("c is not ad-invariant ({:.3e})", inv)));
        }
        if alg.pairing.iter().any(|z| z.im.abs() > 1e-12 * cs) {
            return Err(Error::InvalidModel(String::from(
                "c is not real on the compact generators",
            )));
        }
        Ok(alg)
    }

    /// 𝔰𝔲(2) with `T_k = −(i/2)σ_k` and `c = scale·(−tr)`, i.e. `c(T_a, T_b) = scale·δ_ab/2`.
    pub fn su2(scale: f64) -> Self {
        let mut f = vec![CMat::zeros(3, 3); 3];
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            f[c][(a, b)] = C64::new(1.0, 0.0);
            f[c][(b, a)] = C64::new(-1.0, 0.0);
        }
        let pairing = CMat::identity(3, 3) * C64::new(0.5 * scale, 0.0);
        GaugeAlgebra::new("su2", f, pairing).expect("su(2) is a quadratic Lie algebra")
    }

    /// Abelian algebra with the given pairing.
    pub fn abelian(pairing: CMat) -> Result<Self> {
        let r = pairing.nrows();
        GaugeAlgebra::new("abelian", vec![CMat::zeros(r, r); r], pairing)
    }

    pub fn direct_sum(&self, other: &GaugeAlgebra) -> Self {
        let (r1, r2) = (self.rank(), other.rank());
        let r = r1 + r2;
        let mut f = vec![CMat::zeros(r, r); r];
        for c in 0..r1 {
            f[c].view_mut((0, 0), (r1, r1)).copy_from(&self.f[c]);
        }
        for c in 0..r2 {
            f[r1 + c].view_mut((r1, r1), (r2, r2)).copy_from(&other.f[c]);
        }
        let mut p = CMat::zeros(r, r);
        p.view_mut((0, 0), (r1, r1)).copy_from(&self.pairing);
        p.view_mut((r1, r1), (r2, r2)).copy_from(&other.pairing);
        GaugeAlgebra {
            name: format!("{}+{}", self.name, other.name),
            f,
            pairing: p,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.f.len()
    }

    pub fn structure(&self) -> &[CMat] {
        &self.f
    }

    pub fn pairing(&self) -> &CMat {
        &self.pairing
    }

    pub fn bracket(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let r = self.rank();
        (0..r)
            .map(|c| {
                let mut s = ZERO;
                for a in 0..r {
                    for b in 0..r {
                        s += self.f[c][(a, b)] * x[a] * y[b];
                    }
                }
                s
            })
            .collect()
    }

    /// Bilinear `c(x, y)`.
    pub fn c(&self, x: &[C64], y: &[C64]) -> C64 {
        let r = self.rank();
        let mut s = ZERO;
        for a in 0..r {
            for b in 0..r {
                s += self.pairing[(a, b)] * x[a] * y[b];
            }
        }
        s
    }

    /// Matrix of `ad_x`.
    pub fn ad(&self, x: &[C64]) -> CMat {
        let r = self.rank();
        let mut m = CMat::zeros(r, r);
        for c in 0..r {
            for b in 0..r {
                m[(c, b)] = (0..r).map(|a| self.f[c][(a, b)] * x[a]).sum();
            }
        }
        m
    }

    pub fn jacobi_defect(&self) -> f64 {
        let r = self.rank();
        let mut worst = 0.0f64;
        let e = |i: usize| {
            let mut v = vec![ZERO; r];
            v[i] = C64::new(1.0, 0.0);
            v
        };
        for a in 0..r {
            for b in 0..r {
                for c in 0..r {
                    let (x, y, z) = (e(a), e(b), e(c));
                    let t1 = self.bracket(&x, &self.bracket(&y, &z));
                    let t2 = self.bracket(&y, &self.bracket(&z, &x));
                    let t3 = self.bracket(&z, &self.bracket(&x, &y));
                    for k in 0..r {
                        worst = worst.max((t1[k] + t2[k] + t3[k]).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|c([a, b], d) + c(b, [a, d])|` over basis elements.
    pub fn invariance_defect(&self) -> f64 {
        let r = self.rank();
        let mut worst = 0.0f64;
        for a in 0..r {
            let ad = self.ad(&unit(r, a));
            // c(ad x, y) + c(x, ad y) = ad^T c + c ad
            let m = ad.transpose() * &self.pairing + &self.pairing * &ad;
            worst = worst.max(max_abs(&m));
        }
        worst
    }

    /// `[A ∧ B]`.
    pub fn bracket_wedge(&self, a: &VForm, b: &VForm) -> Result<VForm> {
        let r = self.rank();
        let mut comps = vec![Form::zero(a.dim, a.degree + b.degree); r];
        for i in 0..r {
            if a.comps[i].norm_max() == 0.0 {
                continue;
            }
            for j in 0..r {
                if b.comps[j].norm_max() == 0.0 {
                    continue;
                }
                let w = a.comps[i].wedge(&b.comps[j])?;
                for c in 0..r {
                    let k = self.f[c][(i, j)];
                    if k.norm() != 0.0 {
                        comps[c] += &w.scale(k);
                    }
                }
            }
        }
        Ok(VForm {
            dim: a.dim,
            degree: a.degree + b.degree,
            comps,
        })
    }

    /// `c(A ∧ B)`.
    pub fn c_wedge(&self, a: &VForm, b: &VForm) -> Result<Form> {
        let r = self.rank();
        let mut out = Form::zero(a.dim, a.degree + b.degree);
        for i in 0..r {
            for j in 0..r {
                let k = self.pairing[(i, j)];
                if k.norm() == 0.0 {
                    continue;
                }
                out += &a.comps[i].wedge(&b.comps[j])?.scale(k);
            }
        }
        Ok(out)
    }

    /// `c(u, A)` for a constant element `u`.
    pub fn c_with(&self, u: &[C64], a: &VForm) -> Form {
        let r = self.rank();
        let mut out = Form::zero(a.dim, a.degree);
        for i in 0..r {
            for j in 0..r {
                let k = self.pairing[(i, j)] * u[i];
                if k.norm() != 0.0 {
                    out += &a.comps[j].scale(k);
                }
            }
        }
        out
    }

    /// `[A, u]` for a constant element `u`.
    pub fn bracket_const(&self, a: &VForm, u: &[C64]) -> VForm {
        let m = self.ad(u);
        a.apply(&(-m))
    }
}

fn unit(r: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; r];
    v[i] = C64::new(1.0, 0.0);
    v
}

/// A 𝔤-valued form, one component per basis element of 𝔤.
#[derive(Clone, Debug, PartialEq)]
pub struct VForm {
    dim: usize,
    degree: usize,
    comps: Vec<Form>,
}

impl VForm {
    pub fn zero(rank: usize, dim: usize, degree: usize) -> Self {
        VForm {
            dim,
            degree,
            comps: vec![Form::zero(dim, degree); rank],
        }
    }

    pub fn from_comps(comps: Vec<Form>) -> Result<Self> {
        let first = comps
            .first()
            .ok_or_else(|| Error::Dimension(String::from("empty gauge algebra")))?;
        let (dim, degree) = (first.dim(), first.degree());
        if comps.iter().any(|c| c.dim() != dim || c.degree() != degree) {
            return Err(Error::Degree {
                expected: degree,
                found: comps.iter().map(|c| c.degree()).max().unwrap_or(0),
            });
        }
        Ok(VForm { dim, degree, comps })
    }

    /// `Σ_a x_a T_a ⊗ α`.
    pub fn from_element(x: &[C64], alpha: &Form) -> Self {
        VForm {
            dim: alpha.dim(),
            degree: alpha.degree(),
            comps: x.iter().map(|&c| alpha.scale(c)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Form] {
        &self.comps
    }

    pub fn comp(&self, a: usize) -> &Form {
        &self.comps[a]
    }

    pub fn scale(&self, c: C64) -> VForm {
        self.map(|f| f.scale(c))
    }

    pub fn conj(&self) -> VForm {
        self.map(Form::conj)
    }

    pub fn norm_max(&self) -> f64 {
        self.comps.iter().map(Form::norm_max).fold(0.0, f64::max)
    }

    pub fn imag_max(&self) -> f64 {
        self.comps.iter().map(Form::imag_max).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(&Form) -> Form) -> VForm {
        let comps: Vec<Form> = self.comps.iter().map(f).collect();
        let degree = comps.first().map(|c| c.degree()).unwrap_or(self.degree);
        VForm {
            dim: self.dim,
            degree,
            comps,
        }
    }

    pub fn d(&self, model: &LieModel) -> Result<VForm> {
        let comps = self
            .comps
            .iter()
            .map(|c| model.d(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(VForm {
            dim: self.dim,
            degree: self.degree + 1,
            comps,
        })
    }

    pub fn project(&self, cs: &ComplexStructure, p: usize, q: usize) -> VForm {
        self.map(|c| cs.project(c, p, q))
    }

    /// Applies a linear map of 𝔤 to the values.
    pub fn apply(&self, m: &CMat) -> VForm {
        let r = self.rank();
        let mut comps = vec![Form::zero(self.dim, self.degree); r];
        for c in 0..r {
            for a in 0..r {
                let k = m[(c, a)];
                if k.norm() != 0.0 {
                    comps[c] += &self.comps[a].scale(k);
                }
            }
        }
        VForm {
            dim: self.dim,
            degree: self.degree,
            comps,
        }
    }

    /// `A ∧ α` componentwise.
    pub fn wedge_form(&self, alpha: &Form) -> Result<VForm> {
        let comps = self
            .comps
            .iter()
            .map(|c| c.wedge(alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(VForm {
            dim: self.dim,
            degree: self.degree + alpha.degree(),
            comps,
        })
    }

    /// Stacked coefficient vector.
    pub fn to_vec(&self) -> CVec {
        let mut out = Vec::new();
        for c in &self.comps {
            out.extend_from_slice(c.coeffs());
        }
        CVec::from_vec(out)
    }

    pub fn from_vec(rank: usize, dim: usize, degree: usize, v: &CVec) -> Self {
        let n = v.len() / rank.max(1);
        let comps = (0..rank)
            .map(|a| Form::from_vec(dim, degree, &v.rows(a * n, n).into_owned()))
            .collect();
        VForm { dim, degree, comps }
    }

    /// L² norm with the 𝔤-part Euclidean in the `T_a` basis.
    pub fn l2_norm(&self, h: &HermitianStructure) -> f64 {
        self.comps
            .iter()
            .map(|c| {
                let n = h.l2_norm(c);
                n * n
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl Add for &VForm {
    type Output = VForm;
    fn add(self, o: &VForm) -> VForm {
        VForm {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &VForm {
    type Output = VForm;
    fn sub(self, o: &VForm) -> VForm {
        VForm {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &VForm {
    type Output = VForm;
    fn neg(self) -> VForm {
        self.map(|c| -c)
    }
}

/// `F = dθ + ½[θ ∧ θ]`.
pub fn curvature(alg: &GaugeAlgebra, model: &LieModel, theta: &VForm) -> Result<VForm> {
    let dt = theta.d(model)?;
    let b = alg.bracket_wedge(theta, theta)?;
    Ok(&dt + &b.scale(C64::new(0.5, 0.0)))
}

/// Largest entry of `dF + [θ ∧ F]`.
pub fn bianchi_defect(alg: &GaugeAlgebra, model: &LieModel, theta: &VForm) -> Result<f64> {
    let f = curvature(alg, model, theta)?;
    if f.degree() >= model.dim() {
        return Ok(0.0);
    }
    let r = &f.d(model)? + &alg.bracket_wedge(theta, &f)?;
    Ok(r.norm_max())
}

/// `CS(θ) = c(F ∧ θ) − (1/6) c([θ ∧ θ] ∧ θ)`, so that `dCS(θ) = c(F ∧ F)`.
pub fn chern_simons(alg: &GaugeAlgebra, model: &LieModel, theta: &VForm) -> Result<Form> {
    let f = curvature(alg, model, theta)?;
    let tt = alg.bracket_wedge(theta, theta)?;
    Ok(&alg.c_wedge(&f, theta)? - &alg.c_wedge(&tt, theta)?.scale_re(1.0 / 6.0))
}

/// `c(F ∧ F)`.
pub fn pontryagin(alg: &GaugeAlgebra, model: &LieModel, theta: &VForm) -> Result<Form> {
    let f = curvature(alg, model, theta)?;
    alg.c_wedge(&f, &f)
}

/// A reduction `h = e^u h₀` given by a self-adjoint generator `u = i s`, `s ∈ 𝔨`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub u: Vec<C64>,
    pub order: usize,
}

impl Reduction {
    pub fn new(u: Vec<C64>, order: usize) -> Result<Self> {
        let scale = u.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        if u.iter().any(|z| z.re.abs() > 1e-12 * scale) {
            return Err(Error::Precondition(String::from(
                "generator is not self-adjoint (i·u must lie in the compact form)",
            )));
        }
        if order == 0 {
            return Err(Error::Precondition(String::from("quadrature order must be positive")));
        }
        Ok(Reduction { u, order })
    }

    /// `u = i s` for real `s`.
    pub fn from_compact(s: &[f64]) -> Self {
        Reduction {
            u: s.iter().map(|&x| I * x).collect(),
            order: DEFAULT_QUAD_ORDER,
        }
    }

    pub fn zero(rank: usize) -> Self {
        Reduction {
            u: vec![ZERO; rank],
            order: DEFAULT_QUAD_ORDER,
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Reduction {
            u: self.u.iter().map(|z| z * t).collect(),
            order: self.order,
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// The real element `s` with `u = i s`.
    pub fn compact_part(&self) -> Vec<f64> {
        self.u.iter().map(|z| z.im).collect()
    }
}

/// Composes `h₁ = e^{u₁}h₀` with a step `i s₂` taken from `h₁`.
///
/// Returns `u₂′ = e^{−½ ad u₁}(i s₂)`, which is self-adjoint for `h₁`, and `u₃`
/// with `e^{u₂′}h₁ = e^{u₃}h₀`, from `ad u₃ = −log(e^{X/2} e^{Y} e^{X/2})`,
/// `X = −ad u₁`, `Y = −ad(i s₂)`.
pub fn compose_reductions(alg: &GaugeAlgebra, u1: &Reduction, s2: &[f64]) -> Result<(Reduction, Reduction)> {
    let r = alg.rank();
    if u1.u.len() != r || s2.len() != r {
        return Err(Error::Precondition(String::from("generator length must match the algebra rank")));
    }
    let step = Reduction::from_compact(s2);
    let half = expm(&(alg.ad(&u1.u) * C64::new(-0.5, 0.0)));
    let u2: Vec<C64> = (&half * CVec::from_column_slice(&step.u)).iter().copied().collect();
    let u2 = Reduction { u: u2, order: u1.order };
    // ad as a linear map 𝔤 → End(𝔤)
    let mut ad_map = CMat::zeros(r * r, r);
    for k in 0..r {
        let mut e = vec![ZERO; r];
        e[k] = C64::new(1.0, 0.0);
        let a = alg.ad(&e);
        for (i, z) in a.iter().enumerate() {
            ad_map[(i, k)] = *z;
        }
    }
    let injective = crate::linalg::rank(&ad_map) == r;
    let u3: Vec<C64> = if injective {
        let xh = expm(&(alg.ad(&u1.u) * C64::new(-0.5, 0.0)));
        let y = expm(&(alg.ad(&step.u) * C64::new(-1.0, 0.0)));
        let p = &xh * y * &xh;
        let p = (&p + p.adjoint()) * C64::new(0.5, 0.0);
        let eig = p.symmetric_eigen();
        let mut logp = CMat::zeros(r, r);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam <= 0.0 {
                return Err(Error::NotPositive(String::from("composite reduction is not positive")));
            }
            let v = eig.eigenvectors.column(k);
            logp += v * v.adjoint() * C64::new(lam.ln(), 0.0);
        }
        let target = CVec::from_iterator(r * r, (-logp).iter().copied());
        let u = crate::linalg::lstsq(&ad_map, &target);
        let res = crate::linalg::max_abs_vec(&(&ad_map * &u - &target));
        if res > 1e-10 * crate::linalg::max_abs_vec(&target).max(1.0) {
            return Err(Error::Inconsistent(res));
        }
        u.iter().copied().collect()
    } else {
        // a center is present; only commuting steps compose in closed form
        let comm = alg.bracket(&u1.u, &u2.u);
        if comm.iter().any(|z| z.norm() > 1e-12) {
            return Err(Error::Precondition(String::from(
                "non-commuting steps need an algebra with trivial center",
            )));
        }
        u1.u.iter().zip(&u2.u).map(|(a, b)| a + b).collect()
    };
    let u3 = Reduction::new(
        u3.into_iter().map(|z: C64| C64::new(0.0, z.im)).collect(),
        u1.order,
    )?;
    Ok((u2, u3))
}

/// Chern connection of `e^{tu} h₀`: `θ^{0,1} + exp(−t ad_u) θ^{1,0}`.
pub fn chern_path(
    alg: &GaugeAlgebra,
    cs: &ComplexStructure,
    theta0: &VForm,
    u: &[C64],
    t: f64,
) -> VForm {
    let t10 = theta0.project(cs, 1, 0);
    let t01 = theta0.project(cs, 0, 1);
    let g = expm(&(alg.ad(u) * C64::new(-t, 0.0)));
    &t01 + &t10.apply(&g)
}

/// `∂^h u = [θ^{1,0}, u]` for the Chern connection `θ` of `h`.
pub fn del_h(alg: &GaugeAlgebra, cs: &ComplexStructure, theta: &VForm, u: &[C64]) -> VForm {
    alg.bracket_const(&theta.project(cs, 1, 0), u)
}

/// `∂̄^h a = ∂̄a + [θ^{0,1} ∧ a]` on 𝔤-valued forms.
pub fn delbar_h(alg: &GaugeAlgebra, cs: &ComplexStructure, theta: &VForm, a: &VForm) -> Result<VForm> {
    let db = a.map(|c| cs.delbar(c));
    Ok(&db + &alg.bracket_wedge(&theta.project(cs, 0, 1), a)?)
}

fn r_tilde_with(
    alg: &GaugeAlgebra,
    cs: &ComplexStructure,
    theta0: &VForm,
    u: &[C64],
    order: usize,
) -> Result<Form> {
    let model = cs.model();
    let (x, w) = gauss_legendre(order);
    let mut acc = Form::zero(model.dim(), 2);
    for (t, wt) in x.iter().zip(&w) {
        let th = chern_path(alg, cs, theta0, u, *t);
        let f = curvature(alg, model, &th)?;
        acc += &alg.c_with(u, &f).scale(I * *wt);
    }
    Ok(acc)
}

/// `R̃(h, h₀) = ∫₀¹ i c(u, F_{h_t}) dt` by Gauss-Legendre, checked against the
/// rule with twice the nodes.
pub fn donaldson_r(
    alg: &GaugeAlgebra,
    cs: &ComplexStructure,
    theta0: &VForm,
    path: &Reduction,
) -> Result<Form> {
    let r1 = r_tilde_with(alg, cs, theta0, &path.u, path.order)?;
    let r2 = r_tilde_with(alg, cs, theta0, &path.u, 2 * path.order)?;
    let diff = (&r1 - &r2).norm_max();
    if diff > 1e-8 * r2.norm_max().max(1.0) {
        return Err(Error::Quadrature(diff));
    }
    if r2.imag_max() > 1e-8 * r2.norm_max().max(1.0) {
        return Err(Error::Precondition(format!(
            "R~ has an imaginary part {:.3e}; the reduction is not self-adjoint",
            r2.imag_max()
        )));
    }
    Ok(r2.re())
}

/// `ic(u, F_{h_t})`, the `t`-derivative of `R̃(h_t, h₀)`.
pub fn donaldson_r_derivative(
    alg: &GaugeAlgebra,
    cs: &ComplexStructure,
    theta0: &VForm,
    u: &[C64],
    t: f64,
) -> Result<Form> {
    let th = chern_path(alg, cs, theta0, u, t);
    let f = curvature(alg, cs.model(), &th)?;
    Ok(alg.c_with(u, &f).scale(I).re())
}

/// L² distance of `2i∂R̃ + CS(θ^h) − CS(θ^{h₀}) − dc(θ^h ∧ θ^{h₀})` from `dΩ^{2,0}`.
pub fn csr_defect(
    alg: &GaugeAlgebra,
    h: &HermitianStructure,
    theta0: &VForm,
    path: &Reduction,
) -> Result<f64> {
    let cs = h.complex_structure();
    let model = cs.model();
    let r = donaldson_r(alg, cs, theta0, path)?;
    let th = chern_path(alg, cs, theta0, &path.u, 1.0);
    let x = &(&cs.del(&r).scale(I * 2.0) + &chern_simons(alg, model, &th)?)
        - &(&chern_simons(alg, model, theta0)? + &model.d(&alg.c_wedge(&th, theta0)?)?);
    let b20 = cs.pq_basis(2, 0);
    let img = model.d_matrix(2) * b20;
    Ok(h.project_onto(3, &img, &x.to_vec()).1)
}

/// `‖F ∧ ω^{n−1}‖`.
pub fn hermite_einstein_residual(
    alg: &GaugeAlgebra,
    h: &HermitianStructure,
    theta: &VForm,
) -> Result<f64> {
    let f = curvature(alg, h.model(), theta)?;
    let wn = h.omega().pow(h.n() - 1)?;
    Ok(f.wedge_form(&wn)?.l2_norm(h))
}

/// A gauge algebra with a connection.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub algebra: GaugeAlgebra,
    pub theta: VForm,
}

impl Bundle {
    pub fn new(algebra: GaugeAlgebra, theta: VForm) -> Result<Self> {
        if theta.rank() != algebra.rank() || theta.degree() != 1 {
            return Err(Error::Dimension(format!(
                "connection has {} components of degree {}, algebra has rank {}",
                theta.rank(),
                theta.degree(),
                algebra.rank()
            )));
        }
        Ok(Bundle { algebra, theta })
    }

    /// Trivial connection.
    pub fn trivial(algebra: GaugeAlgebra, dim: usize) -> Self {
        let theta = VForm::zero(algebra.rank(), dim, 1);
        Bundle { algebra, theta }
    }

    pub fn curvature(&self, model: &LieModel) -> Result<VForm> {
        curvature(&self.algebra, model, &self.theta)
    }

    pub fn pontryagin(&self, model: &LieModel) -> Result<Form> {
        pontryagin(&self.algebra, model, &self.theta)
    }

    pub fn chern_simons(&self, model: &LieModel) -> Result<Form> {
        chern_simons(&self.algebra, model, &self.theta)
    }

    /// The same bundle with the Chern connection of `e^u h₀`.
    pub fn reduced(&self, cs: &ComplexStructure, path: &Reduction) -> Bundle {
        Bundle {
            algebra: self.algebra.clone(),
            theta: chern_path(&self.algebra, cs, &self.theta, &path.u, 1.0),
        }
    }

    /// Largest entry of `F^{0,2}`.
    pub fn f02_defect(&self, cs: &ComplexStructure) -> Result<f64> {
        Ok(self.curvature(cs.model())?.project(cs, 0, 2).norm_max())
    }
}
