//! Complex structures and Hermitian data on invariant forms.
//!
//! `J` is stored by its action on covectors (`column j = J e^j`); the
//! (1,0)-forms are the `−i` eigenvectors. The derivation extension of `J`
//! acts on `Ω^{p,q}` by `i(q − p)`, which gives the type projectors.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lie_exterior::{
    basis_masks, derivation_matrix, exterior_power_matrix, rank_of, wedge_matrix, wedge_sign,
    Form, LieModel,
};
use crate::linalg::{
    binomial, column_space, factorial, inverse_hpd, lstsq, max_abs, max_abs_vec,
    min_eigenvalue_sym, re, to_complex, CMat, CVec, RMat, C64, I, ONE, ZERO,
};

/// An integrable complex structure on the Lie algebra.
#[derive(Clone, Debug)]
pub struct ComplexStructure {
    model: Arc<LieModel>,
    jc: RMat,
    n: usize,
    proj: Vec<Vec<Option<CMat>>>,
    del: Vec<CMat>,
    delbar: Vec<CMat>,
}

impl ComplexStructure {
    pub fn new(model: Arc<LieModel>, jc: RMat) -> Result<Self> {
        let m = model.dim();
        if jc.nrows() != m || jc.ncols() != m {
            return Err(Error::Dimension(format!(
                "J is {}x{} on a model of dimension {}",
                jc.nrows(),
                jc.ncols(),
                m
            )));
        }
        if m % 2 != 0 {
            return Err(Error::ComplexStructure(format!("odd real dimension {}", m)));
        }
        let sq = &jc * &jc + RMat::identity(m, m);
        let scale = jc.amax().max(1.0);
        if sq.amax() > 1e-12 * scale * scale {
            return Err(Error::ComplexStructure(format!(
                "J^2 + 1 has entry {:.3e}",
                sq.amax()
            )));
        }
        let n = m / 2;
        let jcc = to_complex(&jc);
        let mut proj = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let dj = derivation_matrix(&jcc, k);
            let size = dj.nrows();
            let lo = k.saturating_sub(n);
            let hi = k.min(n);
            let mut row = vec![None; k + 1];
            for p in lo..=hi {
                let lam = I * ((k - p) as f64 - p as f64);
                let mut acc = CMat::identity(size, size);
                for p2 in lo..=hi {
                    if p2 == p {
                        continue;
                    }
                    let lam2 = I * ((k - p2) as f64 - p2 as f64);
                    acc = (&dj - CMat::identity(size, size) * lam2) * acc / (lam - lam2);
                }
                row[p] = Some(acc);
            }
            proj.push(row);
        }
        let mut cs = ComplexStructure {
            model,
            jc,
            n,
            proj,
            del: Vec::new(),
            delbar: Vec::new(),
        };
        for k in 0..m {
            let d = cs.model.d_matrix(k).clone();
            let rows = d.nrows();
            let cols = d.ncols();
            let mut del = CMat::zeros(rows, cols);
            let mut delbar = CMat::zeros(rows, cols);
            for p in 0..=k {
                let q = k - p;
                let Some(src) = cs.proj[k][p].as_ref() else { continue };
                let dp = &d * src;
                if let Some(t) = cs.proj[k + 1].get(p + 1).and_then(|x| x.as_ref()) {
                    del += t * &dp;
                }
                if q + 1 <= n {
                    if let Some(t) = cs.proj[k + 1][p].as_ref() {
                        delbar += t * &dp;
                    }
                }
            }
            cs.del.push(del);
            cs.delbar.push(delbar);
        }
        let nij = cs.nijenhuis();
        let dscale = (0..m).map(|k| max_abs(cs.model.d_matrix(k))).fold(1.0, f64::max);
        if nij > 1e-10 * dscale * scale * scale {
            return Err(Error::ComplexStructure(format!(
                "not integrable: Nijenhuis tensor has entry {:.3e}",
                nij
            )));
        }
        Ok(cs)
    }

    pub fn model(&self) -> &LieModel {
        &self.model
    }

    pub fn model_arc(&self) -> Arc<LieModel> {
        self.model.clone()
    }

    /// Action on covectors.
    pub fn jc(&self) -> &RMat {
        &self.jc
    }

    /// Action on vectors, `J e_i = Σ_k M[k][i] e_k`.
    pub fn vector_j(&self) -> RMat {
        -self.jc.transpose()
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn projector(&self, p: usize, q: usize) -> Option<&CMat> {
        self.proj.get(p + q)?.get(p)?.as_ref()
    }

    pub fn project(&self, a: &Form, p: usize, q: usize) -> Form {
        if p + q != a.degree() {
            return Form::zero(a.dim(), a.degree());
        }
        match self.projector(p, q) {
            Some(pr) => Form::from_vec(a.dim(), a.degree(), &(pr * a.to_vec())),
            None => Form::zero(a.dim(), a.degree()),
        }
    }

    /// Nonzero `(p, q)` components of `a`.
    pub fn type_decompose(&self, a: &Form) -> BTreeMap<(usize, usize), Form> {
        let k = a.degree();
        let tol = 1e-13 * a.norm_max().max(1e-300);
        let mut out = BTreeMap::new();
        for p in 0..=k {
            let c = self.project(a, p, k - p);
            if c.norm_max() > tol {
                out.insert((p, k - p), c);
            }
        }
        out
    }

    /// Orthonormal coefficient basis (columns) of `Ω^{p,q}`.
    pub fn pq_basis(&self, p: usize, q: usize) -> CMat {
        match self.projector(p, q) {
            Some(pr) => column_space(pr),
            None => CMat::zeros(binomial(self.model.dim(), p + q), 0),
        }
    }

    /// Basis of (1,0)-forms.
    pub fn holomorphic_coframe(&self) -> Vec<Form> {
        let b = self.pq_basis(1, 0);
        (0..b.ncols())
            .map(|j| Form::from_vec(self.model.dim(), 1, &b.column(j).into_owned()))
            .collect()
    }

    pub fn del_matrix(&self, k: usize) -> &CMat {
        &self.del[k]
    }

    pub fn delbar_matrix(&self, k: usize) -> &CMat {
        &self.delbar[k]
    }

    pub fn del(&self, a: &Form) -> Form {
        Form::from_vec(a.dim(), a.degree() + 1, &(&self.del[a.degree()] * a.to_vec()))
    }

    pub fn delbar(&self, a: &Form) -> Form {
        Form::from_vec(a.dim(), a.degree() + 1, &(&self.delbar[a.degree()] * a.to_vec()))
    }

    /// `d^c = i(∂̄ − ∂)`.
    pub fn dc(&self, a: &Form) -> Form {
        (&self.delbar(a) - &self.del(a)).scale(I)
    }

    pub fn dc_matrix(&self, k: usize) -> CMat {
        (&self.delbar[k] - &self.del[k]) * I
    }

    /// `dd^c = 2i∂∂̄`.
    pub fn ddc(&self, a: &Form) -> Form {
        self.model.dd(&self.dc(a))
    }

    /// `J` extended to forms as an algebra automorphism.
    pub fn j_matrix(&self, k: usize) -> CMat {
        let size = binomial(self.model.dim(), k);
        let mut m = CMat::zeros(size, size);
        for p in 0..=k {
            if let Some(pr) = self.projector(p, k - p) {
                let e = (k - p) as i32 - p as i32;
                m += pr * I.powi(e);
            }
        }
        m
    }

    pub fn apply_j(&self, a: &Form) -> Form {
        Form::from_vec(a.dim(), a.degree(), &(self.j_matrix(a.degree()) * a.to_vec()))
    }

    /// Largest component of the Nijenhuis tensor.
    pub fn nijenhuis(&self) -> f64 {
        let m = self.model.dim();
        let jv = to_complex(&self.vector_j());
        let col = |i: usize| -> Vec<C64> { jv.column(i).iter().copied().collect() };
        let apply = |v: &[C64]| -> Vec<C64> {
            let x = CVec::from_column_slice(v);
            (&jv * x).iter().copied().collect()
        };
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let mut ei = vec![ZERO; m];
                ei[i] = ONE;
                let mut ej = vec![ZERO; m];
                ej[j] = ONE;
                let (ji, jj) = (col(i), col(j));
                let a = self.model.bracket(&ji, &jj);
                let b = apply(&self.model.bracket(&ji, &ej));
                let c = apply(&self.model.bracket(&ei, &jj));
                let d = self.model.bracket(&ei, &ej);
                for k in 0..m {
                    worst = worst.max((a[k] - b[k] - c[k] - d[k]).norm());
                }
            }
        }
        worst
    }

    /// Largest entry of `d − ∂ − ∂̄` on 1-forms.
    pub fn integrability_defect(&self) -> f64 {
        let d = self.model.d_matrix(0);
        max_abs(&(d - &self.del[0] - &self.delbar[0]))
    }
}

/// An `(n,0)`-form.
#[derive(Clone, Debug)]
pub struct SUnStructure {
    pub psi: Form,
}

impl SUnStructure {
    pub fn new(cs: &ComplexStructure, psi: Form) -> Result<Self> {
        let n = cs.n();
        if psi.degree() != n {
            return Err(Error::Degree {
                expected: n,
                found: psi.degree(),
            });
        }
        let off = &psi - &cs.project(&psi, n, 0);
        if off.norm_max() > 1e-10 * psi.norm_max().max(1.0) {
            return Err(Error::ComplexStructure(String::from(
                "psi is not of type (n,0)",
            )));
        }
        Ok(SUnStructure { psi })
    }
}

/// A positive (1,1)-form together with the derived metric data.
#[derive(Clone, Debug)]
pub struct HermitianStructure {
    cs: Arc<ComplexStructure>,
    omega: Form,
    g: RMat,
    gram: Vec<CMat>,
    gram_inv: Vec<CMat>,
    vol: Form,
    vol_raw: f64,
    mu: Form,
    lee: Form,
}

impl HermitianStructure {
    /// `mu` defaults to the orientation form.
    pub fn new(cs: Arc<ComplexStructure>, omega: Form, mu: Option<Form>) -> Result<Self> {
        let model = cs.model_arc();
        let m = model.dim();
        let n = cs.n();
        if omega.degree() != 2 || omega.dim() != m {
            return Err(Error::Degree {
                expected: 2,
                found: omega.degree(),
            });
        }
        let scale = omega.norm_max().max(1e-300);
        if omega.imag_max() > 1e-12 * scale {
            return Err(Error::NotPositive(String::from("omega is not real")));
        }
        let omega = omega.re();
        let off = &omega - &cs.project(&omega, 1, 1);
        if off.norm_max() > 1e-10 * scale {
            return Err(Error::NotPositive(format!(
                "omega is not of type (1,1) (defect {:.3e})",
                off.norm_max()
            )));
        }
        let g = metric_of(&cs, &omega);
        let lam = min_eigenvalue_sym(&g);
        if !(lam > 1e-12 * g.amax()) {
            return Err(Error::NotPositive(format!(
                "metric has smallest eigenvalue {:.3e}",
                lam
            )));
        }
        let vol = omega.pow(n)?.scale_re(1.0 / factorial(n));
        let top = model.top_coefficient(&vol)?;
        if !(top.re > 0.0) {
            return Err(Error::NotPositive(String::from(
                "omega^n has the wrong orientation",
            )));
        }
        let mu = match mu {
            Some(mu) => {
                let t = model.top_coefficient(&mu)?;
                if !(t.re > 0.0) || t.im.abs() > 1e-12 * t.re {
                    return Err(Error::NotPositive(String::from(
                        "reference volume is not positive",
                    )));
                }
                mu
            }
            None => model.orientation_form(),
        };
        let ginv = to_complex(&inverse_sym(&g));
        let gram: Vec<CMat> = (0..=m).map(|k| exterior_power_matrix(&ginv, k)).collect();
        let gram_inv: Vec<CMat> = gram.iter().map(inverse_hpd).collect();
        let vol_raw = vol.coeffs()[0].re;
        let mut h = HermitianStructure {
            cs,
            omega,
            g,
            gram,
            gram_inv,
            vol,
            vol_raw,
            mu,
            lee: Form::zero(m, 1),
        };
        h.lee = h.solve_lee()?;
        Ok(h)
    }

    pub fn complex_structure(&self) -> &ComplexStructure {
        &self.cs
    }

    pub fn cs_arc(&self) -> Arc<ComplexStructure> {
        self.cs.clone()
    }

    pub fn model(&self) -> &LieModel {
        self.cs.model()
    }

    pub fn n(&self) -> usize {
        self.cs.n()
    }

    pub fn dim(&self) -> usize {
        self.model().dim()
    }

    pub fn omega(&self) -> &Form {
        &self.omega
    }

    pub fn mu(&self) -> &Form {
        &self.mu
    }

    /// Metric `g(X, Y) = ω(X, JY)` on the basis vectors.
    pub fn metric(&self) -> &RMat {
        &self.g
    }

    pub fn gram(&self, k: usize) -> &CMat {
        &self.gram[k]
    }

    pub fn gram_inv(&self, k: usize) -> &CMat {
        &self.gram_inv[k]
    }

    /// `ωⁿ/n!`.
    pub fn volume_form(&self) -> &Form {
        &self.vol
    }

    /// `∫ ωⁿ/n!`.
    pub fn total_volume(&self) -> f64 {
        self.model()
            .integrate_top(&self.vol)
            .map(|z| z.re)
            .unwrap_or(0.0)
    }

    /// A Hermitian structure with the same `J` and `μ`.
    pub fn with_omega(&self, omega: Form) -> Result<Self> {
        HermitianStructure::new(self.cs.clone(), omega, Some(self.mu.clone()))
    }

    pub fn with_mu(&self, mu: Form) -> Result<Self> {
        HermitianStructure::new(self.cs.clone(), self.omega.clone(), Some(mu))
    }

    /// Pointwise Hermitian product `⟨α, β⟩`, linear in `α`.
    pub fn inner(&self, a: &Form, b: &Form) -> C64 {
        let k = a.degree();
        let gv = &self.gram[k] * a.to_vec();
        b.to_vec().dotc(&gv)
    }

    pub fn norm2(&self, a: &Form) -> f64 {
        self.inner(a, a).re.max(0.0)
    }

    /// L² norm over the quotient.
    pub fn l2_norm(&self, a: &Form) -> f64 {
        (self.norm2(a) * self.total_volume()).sqrt()
    }

    /// L² norm of a coefficient vector of degree `k`.
    pub fn l2_norm_vec(&self, k: usize, v: &CVec) -> f64 {
        let gv = &self.gram[k] * v;
        (v.dotc(&gv).re.max(0.0) * self.total_volume()).sqrt()
    }

    /// Gram-orthogonal projection of `x` (degree `k`) onto the span of the
    /// columns of `a`. Returns the minimal-norm coefficients and the L² norm
    /// of the residual.
    pub fn project_onto(&self, k: usize, a: &CMat, x: &CVec) -> (CVec, f64) {
        let g = &self.gram[k];
        let l = match g.clone().cholesky() {
            Some(c) => c.l(),
            None => CMat::identity(g.nrows(), g.ncols()),
        };
        let lh = l.adjoint();
        let coef = lstsq(&(&lh * a), &(&lh * x));
        let r = x - a * &coef;
        let norm = self.l2_norm_vec(k, &r);
        (coef, norm)
    }

    /// Matrix of `L = ω ∧ ·` from degree `k`.
    pub fn lefschetz_matrix(&self, k: usize) -> CMat {
        wedge_matrix(&self.omega, k).expect("degree within range")
    }

    /// Matrix of `Λ_ω` from degree `k` to `k − 2`.
    pub fn lambda_matrix(&self, k: usize) -> CMat {
        self.adjoint_matrix(&self.lefschetz_matrix(k - 2), k - 2, k)
    }

    pub fn lambda(&self, a: &Form) -> Form {
        let k = a.degree();
        if k < 2 {
            return Form::zero(a.dim(), 0);
        }
        Form::from_vec(a.dim(), k - 2, &(self.lambda_matrix(k) * a.to_vec()))
    }

    /// `Λ_ω` of a 2-form as a scalar.
    pub fn trace(&self, a: &Form) -> C64 {
        self.lambda(a).coeffs()[0]
    }

    /// Adjoint of `A: Ω^{dom} → Ω^{cod}` for the Gram inner products.
    pub fn adjoint_matrix(&self, a: &CMat, dom: usize, cod: usize) -> CMat {
        &self.gram_inv[dom] * a.adjoint() * &self.gram[cod]
    }

    /// Matrix of `d*` from degree `k` to `k − 1`.
    pub fn codifferential_matrix(&self, k: usize) -> CMat {
        self.adjoint_matrix(self.model().d_matrix(k - 1), k - 1, k)
    }

    pub fn codifferential(&self, a: &Form) -> Form {
        let k = a.degree();
        Form::from_vec(a.dim(), k - 1, &(self.codifferential_matrix(k) * a.to_vec()))
    }

    /// Complex-linear Hodge star, `α ∧ *β = g(α, β) ωⁿ/n!`.
    pub fn hodge_matrix(&self, k: usize) -> CMat {
        let m = self.dim();
        let full: u32 = (1u32 << m) - 1;
        let masks = basis_masks(m, k);
        let mut s = CMat::zeros(binomial(m, m - k), masks.len());
        for (j, _) in masks.iter().enumerate() {
            for (i, &mi) in masks.iter().enumerate() {
                let c = self.gram[k][(i, j)];
                if c.norm() == 0.0 {
                    continue;
                }
                let comp = full ^ mi;
                let sign = wedge_sign(mi, comp) as f64;
                s[(rank_of(m, comp), j)] += c * self.vol_raw * sign;
            }
        }
        s
    }

    pub fn hodge_star(&self, a: &Form) -> Form {
        let k = a.degree();
        Form::from_vec(a.dim(), self.dim() - k, &(self.hodge_matrix(k) * a.to_vec()))
    }

    /// The Lee form, solving `dω^{n−1} = θ ∧ ω^{n−1}`.
    pub fn lee_form(&self) -> &Form {
        &self.lee
    }

    fn solve_lee(&self) -> Result<Form> {
        let n = self.n();
        let m = self.dim();
        if n < 2 {
            return Ok(Form::zero(m, 1));
        }
        let wn1 = self.omega.pow(n - 1)?;
        let rhs = self.model().d(&wn1)?.to_vec();
        let a = wedge_matrix(&wn1, 1)?;
        let x = lstsq(&a, &rhs);
        let res = max_abs_vec(&(&a * &x - &rhs));
        let scale = max_abs_vec(&rhs).max(wn1.norm_max());
        if res > 1e-9 * scale.max(1e-300) {
            return Err(Error::Inconsistent(res));
        }
        Ok(Form::from_vec(m, 1, &x).re())
    }

    /// Second formula for the Lee form, `θ = J d*ω` with `J` acting on covectors.
    pub fn lee_form_codifferential(&self) -> Form {
        let ds = self.codifferential(&self.omega);
        let j = to_complex(self.cs.jc());
        Form::from_vec(self.dim(), 1, &(j * ds.to_vec()))
    }

    /// `f` with `ωⁿ/n! = e^{2f} μ`.
    pub fn dilaton_function(&self) -> Result<f64> {
        let model = self.model();
        let r = model.top_coefficient(&self.vol)? / model.top_coefficient(&self.mu)?;
        if !(r.re > 0.0) {
            return Err(Error::NotPositive(String::from(
                "omega^n is not a positive multiple of mu",
            )));
        }
        Ok(0.5 * r.re.ln())
    }

    /// `‖Ψ‖_ω` from `‖Ψ‖² ωⁿ/n! = (−1)^{n(n−1)/2} iⁿ Ψ ∧ Ψ̄`.
    pub fn psi_norm(&self, psi: &Form) -> Result<f64> {
        let n = self.n();
        SUnStructure::new(&self.cs, psi.clone())?;
        let top = self.model().top_coefficient(&self.vol)?;
        if top.norm() == 0.0 {
            return Err(Error::NotPositive(String::from("omega^n vanishes")));
        }
        let s = psi_squared(psi, n)?;
        let r = self.model().top_coefficient(&s)? / top;
        Ok(r.re.max(0.0).sqrt())
    }

    /// `σ` and `β = Λα` with `α = σ + β ω/n`, `Λσ = 0`.
    pub fn lefschetz_split(&self, a: &Form) -> (Form, C64) {
        let beta = self.trace(a);
        let sigma = a - &self.omega.scale(beta / self.n() as f64);
        (sigma, beta)
    }

    /// Levi-Civita Christoffel symbols `Γ[a][(c, b)]`, `∇_{e_a} e_b = Σ_c Γ^c_{ab} e_c`.
    pub fn levi_civita(&self) -> Vec<RMat> {
        self.connection_symbols(0.0)
    }

    /// Christoffel symbols of `∇ + s·½ g⁻¹ d^cω`.
    pub fn connection_symbols(&self, s: f64) -> Vec<RMat> {
        let m = self.dim();
        let model = self.model();
        let br = model.bracket_constants();
        let g = &self.g;
        let ginv = inverse_sym(g);
        let h = self.cs.dc(&self.omega).re();
        // g([e_a, e_b], e_z)
        let gb = |a: usize, b: usize, z: usize| -> f64 {
            (0..m).map(|k| br[k][(a, b)].re * g[(k, z)]).sum()
        };
        let mut out = vec![RMat::zeros(m, m); m];
        for a in 0..m {
            for b in 0..m {
                let mut low = vec![0.0; m];
                for z in 0..m {
                    low[z] = 0.5 * (gb(a, b, z) - gb(b, z, a) + gb(z, a, b))
                        + 0.5 * s * h.eval(&[a, b, z]).re;
                }
                for c in 0..m {
                    out[a][(c, b)] = (0..m).map(|z| ginv[(c, z)] * low[z]).sum();
                }
            }
        }
        out
    }

    /// Covector action matrices `N_a`, `∇_a e^c = Σ_b N_a[b][c] e^b`.
    pub fn covector_action(&self, gamma: &[RMat]) -> Vec<CMat> {
        let m = self.dim();
        gamma
            .iter()
            .map(|ga| {
                let mut n = CMat::zeros(m, m);
                for b in 0..m {
                    for c in 0..m {
                        n[(b, c)] = re(-ga[(c, b)]);
                    }
                }
                n
            })
            .collect()
    }

    /// Largest entry of `∇J` for the connection with torsion coefficient `s`.
    pub fn hermitian_defect(&self, s: f64) -> f64 {
        let jc = to_complex(self.cs.jc());
        self.covector_action(&self.connection_symbols(s))
            .iter()
            .map(|na| max_abs(&(na * &jc - &jc * na)))
            .fold(0.0, f64::max)
    }

    /// Sign `s` in `∇⁺ = ∇ + s·½ g⁻¹ d^cω` for which `∇⁺J = 0`.
    pub fn bismut_sign(&self) -> f64 {
        if self.hermitian_defect(-1.0) <= self.hermitian_defect(1.0) {
            -1.0
        } else {
            1.0
        }
    }

    /// Pointwise norm of `∇⁺Ψ` for the Bismut connection.
    pub fn bismut_check(&self, psi: &Form) -> f64 {
        let s = self.bismut_sign();
        let nas = self.covector_action(&self.connection_symbols(s));
        let k = psi.degree();
        let grads: Vec<CVec> = nas
            .iter()
            .map(|na| derivation_matrix(na, k) * psi.to_vec())
            .collect();
        let ginv = inverse_sym(&self.g);
        let m = self.dim();
        let mut total = ZERO;
        for a in 0..m {
            for b in 0..m {
                let gv = &self.gram[k] * &grads[a];
                total += grads[b].dotc(&gv) * ginv[(a, b)];
            }
        }
        total.re.max(0.0).sqrt()
    }
}

/// `(−1)^{n(n−1)/2} iⁿ Ψ ∧ Ψ̄`.
pub fn psi_squared(psi: &Form, n: usize) -> Result<Form> {
    let sign = if (n * (n.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(psi.wedge(&psi.conj())?.scale(I.powi(n as i32) * sign))
}

/// `g = W·M` with `W_ij = ω(e_i, e_j)` and `M` the vector action of `J`.
pub fn metric_of(cs: &ComplexStructure, omega: &Form) -> RMat {
    let m = omega.dim();
    let mut w = RMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            w[(i, j)] = omega.eval(&[i, j]).re;
        }
    }
    let g = w * cs.vector_j();
    (&g + g.transpose()) * 0.5
}

fn inverse_sym(g: &RMat) -> RMat {
    let n = g.nrows();
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| g.clone().try_inverse().unwrap_or_else(|| RMat::zeros(n, n)))
}
