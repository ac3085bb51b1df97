//! The linearized operator on invariant forms, its principal symbol, and the
//! duality, index and rescaling checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebroid::{metric_from_parameters, MetricPair};
use crate::error::{Error, Result};
use crate::gauge::{curvature, del_h, Reduction, VForm};
use crate::hermitian::HermitianStructure;
use crate::lie_exterior::{wedge_matrix, Form};
use crate::linalg::{
    column_space, max_abs, null_space, singular_values, svd_full, vcat, CMat, CVec, C64, I,
};
use crate::variation::FD_STEPS;

/// Tolerance for the solution flag.
pub const ON_SHELL_TOL: f64 = 1e-8;

/// A linear map between invariant spaces with Gram matrices on both sides.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub matrix: CMat,
    pub domain: Vec<String>,
    pub codomain: Vec<String>,
    pub gram_domain: CMat,
    pub gram_codomain: CMat,
}

impl OperatorMatrix {
    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    /// Adjoint for the Gram inner products.
    pub fn adjoint(&self) -> CMat {
        crate::linalg::adjoint(&self.matrix, &self.gram_domain, &self.gram_codomain)
    }

    pub fn apply(&self, x: &CVec) -> CVec {
        &self.matrix * x
    }
}

/// `𝓛 = 𝓤 + 𝓚` at a metric pair, with `𝓤₁` on `Ω¹` alone.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub l: OperatorMatrix,
    pub u: OperatorMatrix,
    pub k: OperatorMatrix,
    pub u1: CMat,
    pub n: usize,
    /// Number of `ξ` coordinates; the rest are gauge coordinates.
    pub forms: usize,
    pub rank: usize,
    /// `‖F ∧ ω^{n−1}‖`; the theory applies when this vanishes.
    pub he_residual: f64,
    pub on_shell: bool,
}

/// `T(α) = α − Λ_ω(α) ω / (2(n−1))`.
pub fn t_operator(h: &HermitianStructure, a: &Form) -> Form {
    let n = h.n() as f64;
    let tr = h.trace(a);
    a - &h.omega().scale(tr / (2.0 * (n - 1.0)))
}

/// `(d − θ)` on a form, with `θ` the Lee form of `h`.
pub fn twisted_d(h: &HermitianStructure, a: &Form) -> Result<Form> {
    Ok(&h.model().d(a)? - &h.lee_form().wedge(a)?)
}

fn twisted_d_matrix(h: &HermitianStructure, k: usize) -> Result<CMat> {
    Ok(h.model().d_matrix(k) - wedge_matrix(h.lee_form(), k)?)
}

fn hermitian_of(pair: &MetricPair) -> Result<HermitianStructure> {
    HermitianStructure::new(pair.cs.clone(), pair.omega.clone(), None)
}

fn unit(r: usize, k: usize) -> Vec<f64> {
    let mut s = vec![0.0; r];
    s[k] = 1.0;
    s
}

fn top_coeffs(v: &VForm) -> Vec<C64> {
    v.comps().iter().map(|c| c.coeffs()[0]).collect()
}

fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (r1, c1) = a.shape();
    let (r2, c2) = b.shape();
    let mut out = CMat::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((r1, c1), (r2, c2)).copy_from(b);
    out
}

/// Assembles `𝓛`, `𝓤` and `𝓚` at a pair. Domain coordinates are `ξ` in the
/// coframe followed by `s` in the compact basis, with `δh = i s`.
pub fn assemble_l(pair: &MetricPair) -> Result<Linearization> {
    let h = hermitian_of(pair)?;
    let n = h.n();
    if n < 2 {
        return Err(Error::Precondition(String::from("complex dimension must be at least 2")));
    }
    let m = h.dim();
    let model = h.model();
    let cs = h.complex_structure();
    let alg = &pair.bundle.algebra;
    let theta = &pair.bundle.theta;
    let r = alg.rank();
    let f = curvature(alg, model, theta)?;
    let wn2 = h.omega().pow(n - 2)?;
    let wn1 = h.omega().pow(n - 1)?;
    let nm1 = (n - 1) as f64;
    let he = f.wedge_form(&wn1)?.norm_max();

    let rows1 = m;
    let rows = rows1 + r;
    let cols = m + r;
    let mut l = CMat::zeros(rows, cols);
    let mut u = CMat::zeros(rows, cols);
    let mut u1 = CMat::zeros(m, m);

    let first_row = |dw: &Form| -> Result<CVec> { Ok(twisted_d(&h, &t_operator(&h, dw).w(&wn2))?.to_vec()) };
    let second_row = |dw: &Form| -> Result<Vec<C64>> { Ok(top_coeffs(&f.wedge_form(&dw.w(&wn2))?.scale(C64::new(nm1, 0.0)))) };

    for j in 0..m {
        let dw = cs.project(&model.d(&model.e(j))?, 1, 1).scale_re(2.0);
        let a = first_row(&dw)?;
        let b = second_row(&dw)?;
        for i in 0..rows1 {
            l[(i, j)] = a[i];
            u[(i, j)] = a[i];
            u1[(i, j)] = a[i];
        }
        for (i, z) in b.into_iter().enumerate() {
            l[(rows1 + i, j)] = z;
        }
    }
    for k in 0..r {
        let red = Reduction::from_compact(&unit(r, k));
        let dw = alg.c_with(&red.u, &f).scale(I).re();
        let fdot = {
            let a = del_h(alg, cs, theta, &red.u);
            &a.d(model)? + &alg.bracket_wedge(theta, &a)?
        };
        let lap = top_coeffs(&fdot.wedge_form(&wn1)?);
        let a = first_row(&dw)?;
        let b = second_row(&dw)?;
        for i in 0..rows1 {
            l[(i, m + k)] = a[i];
        }
        for i in 0..r {
            l[(rows1 + i, m + k)] = lap[i] + b[i];
            u[(rows1 + i, m + k)] = lap[i];
        }
    }
    let k_mat = &l - &u;
    let mut domain: Vec<String> = (0..m).map(|j| format!("xi[e{}]", j + 1)).collect();
    domain.extend((0..r).map(|k| format!("s[T{}]", k + 1)));
    let mut codomain: Vec<String> = crate::lie_exterior::basis_masks(m, m - 1)
        .into_iter()
        .map(|mk| {
            let idx: Vec<String> = crate::lie_exterior::indices_of(mk).iter().map(|i| (i + 1).to_string()).collect();
            format!("L1[e{}]", idx.join(""))
        })
        .collect();
    codomain.extend((0..r).map(|k| format!("L2[T{}]", k + 1)));
    let gd = block_diag(h.gram(1), &CMat::identity(r, r));
    let gc = block_diag(h.gram(m - 1), &(CMat::identity(r, r) * h.gram(m)[(0, 0)]));
    let op = |mat: CMat| OperatorMatrix {
        matrix: mat,
        domain: domain.clone(),
        codomain: codomain.clone(),
        gram_domain: gd.clone(),
        gram_codomain: gc.clone(),
    };
    Ok(Linearization {
        l: op(l),
        u: op(u),
        k: op(k_mat),
        u1,
        n,
        forms: m,
        rank: r,
        he_residual: he,
        on_shell: he <= ON_SHELL_TOL,
    })
}

/// The nonlinear map whose derivative at `0` is `𝓛`:
/// `((dω̃^{n−1} − θ ∧ ω̃^{n−1})/(n−1), F_{h̃} ∧ ω̃^{n−1})` at
/// `(ω̃, h̃)` built from `(ξ, s)`, with `θ` the base Lee form.
pub fn residual_map(base: &MetricPair, lee: &Form, xi: &Form, s: &[f64]) -> Result<CVec> {
    let pair = metric_from_parameters(base, xi, &Reduction::from_compact(s))?;
    let h = hermitian_of(&pair)?;
    let n = h.n();
    let model = h.model();
    let wn1 = pair.omega.pow(n - 1)?;
    let r1 = (&model.d(&wn1)? - &lee.wedge(&wn1)?).scale_re(1.0 / (n - 1) as f64);
    let f = curvature(&pair.bundle.algebra, model, &pair.bundle.theta)?;
    let r2 = top_coeffs(&f.wedge_form(&wn1)?);
    let mut v: Vec<C64> = r1.coeffs().to_vec();
    v.extend(r2);
    Ok(CVec::from_vec(v))
}

/// Finite-difference Jacobian of [`residual_map`] at the base.
pub fn fd_jacobian(base: &MetricPair) -> Result<CMat> {
    let h = hermitian_of(base)?;
    let m = h.dim();
    let r = base.bundle.algebra.rank();
    let lee = h.lee_form().clone();
    let rows = m + r;
    let mut jac = CMat::zeros(rows, m + r);
    for j in 0..m + r {
        let eval = |t: f64| -> Result<CVec> {
            let mut xi = Form::zero(m, 1);
            let mut s = vec![0.0; r];
            if j < m {
                xi.add_term(&[j], C64::new(t, 0.0));
            } else {
                s[j - m] = t;
            }
            residual_map(base, &lee, &xi, &s)
        };
        let raw: Vec<CVec> = FD_STEPS
            .iter()
            .map(|&hs| Ok((eval(hs)? - eval(-hs)?) / C64::new(2.0 * hs, 0.0)))
            .collect::<Result<_>>()?;
        let col = (&raw[2] * C64::new(4.0, 0.0) - &raw[1]) / C64::new(3.0, 0.0);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Entrywise comparison of `𝓛` against the FD Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianCheck {
    pub max_abs_diff: f64,
    pub scale: f64,
    pub rel_err: f64,
}

pub fn jacobian_check(base: &MetricPair) -> Result<JacobianCheck> {
    let lin = assemble_l(base)?;
    let fd = fd_jacobian(base)?;
    let diff = max_abs(&(&lin.l.matrix - &fd));
    let scale = max_abs(&lin.l.matrix).max(max_abs(&fd));
    Ok(JacobianCheck {
        max_abs_diff: diff,
        scale,
        rel_err: if scale > 0.0 { diff / scale } else { diff },
    })
}

/// `max ‖𝓛(ξ, 0)‖` over an orthonormal basis of closed `ξ`.
pub fn closed_forms_in_kernel(lin: &Linearization, h: &HermitianStructure) -> f64 {
    let m = lin.forms;
    let closed = null_space(h.model().d_matrix(1));
    let mut worst: f64 = 0.0;
    for c in closed.column_iter() {
        let mut x = CVec::zeros(m + lin.rank);
        x.rows_mut(0, m).copy_from(&c);
        worst = worst.max(lin.l.apply(&x).iter().fold(0.0, |a, z| a.max(z.norm())));
    }
    worst
}

/// `‖(d − θ) ∘ 𝓛₁‖`.
pub fn complex_defect(lin: &Linearization, h: &HermitianStructure) -> Result<f64> {
    let m = lin.forms;
    let dt = twisted_d_matrix(h, m - 1)?;
    let l1 = lin.l.matrix.rows(0, m).into_owned();
    Ok(max_abs(&(dt * l1)))
}

/// `σ_{𝓤₁}(v)(ξ) = v ∧ T(v∧ξ + Jv∧Jξ) ∧ ω^{n−2}` as a matrix `Λ¹ → Λ^{2n−1}`.
#[derive(Clone, Debug)]
pub struct SymbolMatrix {
    pub v: Form,
    pub matrix: CMat,
}

pub fn symbol_u1(h: &HermitianStructure, v: &Form) -> Result<SymbolMatrix> {
    if v.degree() != 1 {
        return Err(Error::Degree { expected: 1, found: v.degree() });
    }
    if v.norm_max() == 0.0 {
        return Err(Error::Precondition(String::from("the covector must be nonzero")));
    }
    let m = h.dim();
    let n = h.n();
    let cs = h.complex_structure();
    let wn2 = h.omega().pow(n - 2)?;
    let mut mat = CMat::zeros(m, m);
    for j in 0..m {
        let vx = v.w(&Form::e(m, j));
        // v∧ξ + Jv∧Jξ = 2(v∧ξ)^{1,1}
        let a = cs.project(&vx, 1, 1).scale_re(2.0);
        let col = v.w(&t_operator(h, &a)).w(&wn2).to_vec();
        mat.set_column(j, &col);
    }
    Ok(SymbolMatrix { v: v.clone(), matrix: mat })
}

/// Kernel data of one symbol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolKernel {
    pub nullity: usize,
    /// Smallest singular value above the kernel, relative to the largest.
    pub gap: f64,
    /// `1 − |⟨k, v⟩|/(|k||v|)` for the kernel vector `k`.
    pub alignment_defect: f64,
}

pub fn symbol_kernel(sym: &SymbolMatrix) -> SymbolKernel {
    let (sv, vecs) = svd_full(&sym.matrix);
    let m = sv.len();
    let top = sv[0].max(f64::MIN_POSITIVE);
    let nullity = sv.iter().filter(|&&s| s <= 1e-10 * top).count();
    let gap = if m >= 2 { sv[m - 2] / top } else { 0.0 };
    let k = vecs.column(m - 1);
    let v = sym.v.to_vec();
    let alignment_defect = 1.0 - k.dotc(&v).norm() / (k.norm() * v.norm());
    SymbolKernel {
        nullity,
        gap,
        alignment_defect,
    }
}

/// Result of a random ellipticity scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub trials: usize,
    pub seed: u64,
    pub failures: usize,
    pub min_gap: f64,
    pub max_alignment_defect: f64,
    pub pass: bool,
}

/// Minimum relative singular-value gap accepted by the scan.
pub const SYMBOL_GAP: f64 = 1e-6;

/// A unit covector with coefficients drawn uniformly from `[−1, 1]`.
pub fn random_unit_covector(h: &HermitianStructure, rng: &mut ChaCha8Rng) -> Form {
    let m = h.dim();
    loop {
        let c: Vec<C64> = (0..m).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let v = Form::from_coeffs(m, 1, c).expect("length matches");
        let norm = h.norm2(&v).sqrt();
        if norm > 1e-3 {
            return v.scale_re(1.0 / norm);
        }
    }
}

pub fn ellipticity_scan(h: &HermitianStructure, trials: usize, seed: u64) -> Result<EllipticityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut min_gap = f64::INFINITY;
    let mut max_align: f64 = 0.0;
    for _ in 0..trials {
        let v = random_unit_covector(h, &mut rng);
        let k = symbol_kernel(&symbol_u1(h, &v)?);
        if k.nullity != 1 || k.gap < SYMBOL_GAP || k.alignment_defect > 1e-10 {
            failures += 1;
        }
        min_gap = min_gap.min(k.gap);
        max_align = max_align.max(k.alignment_defect);
    }
    Ok(EllipticityReport {
        trials,
        seed,
        failures,
        min_gap,
        max_alignment_defect: max_align,
        pass: failures == 0,
    })
}

/// `‖𝓤₁* − *𝓤₁*‖`, defined when the Lee form vanishes.
pub fn duality_check(pair: &MetricPair) -> Result<f64> {
    let h = hermitian_of(pair)?;
    let lee = h.lee_form().norm_max();
    if lee > 1e-10 {
        return Err(Error::Precondition(format!(
            "the Lee form is not exact ({:.3e}); duality needs it to vanish",
            lee
        )));
    }
    let lin = assemble_l(pair)?;
    let m = h.dim();
    let adj = h.adjoint_matrix(&lin.u1, 1, m - 1);
    let star = h.hodge_matrix(m - 1);
    Ok(max_abs(&(adj - &star * &lin.u1 * &star)))
}

/// Kernel and cokernel of the restriction to `Im d* ⊕ Ω⁰(ad)` against
/// `Im (d − θ) ⊕ Ω^{2n}(ad)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub domain_dim: usize,
    pub codomain_dim: usize,
    pub singular_values: Vec<f64>,
    pub ker: usize,
    pub coker: usize,
    pub index: i64,
    /// Part of the restricted image outside the restricted codomain.
    pub containment_defect: f64,
}

/// `G = W^H W` with `W` upper triangular.
fn whitener(g: &CMat) -> Result<CMat> {
    let ch = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositive(String::from("Gram matrix is not positive definite")))?;
    Ok(ch.l().adjoint())
}

fn whitened(op: &OperatorMatrix) -> Result<(CMat, CMat, CMat)> {
    let wd = whitener(&op.gram_domain)?;
    let wc = whitener(&op.gram_codomain)?;
    let wd_inv = wd
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositive(String::from("singular Gram matrix")))?;
    Ok((&wc * &op.matrix * &wd_inv, wd, wc))
}

pub fn index_report(lin: &Linearization, h: &HermitianStructure) -> Result<IndexReport> {
    let m = lin.forms;
    let r = lin.rank;
    let (a, wd, wc) = whitened(&lin.l)?;
    let dstar = h.codifferential_matrix(2);
    let dom = block_diag(&dstar, &CMat::identity(r, r));
    let cod = block_diag(&twisted_d_matrix(h, m - 2)?, &CMat::identity(r, r));
    let qd = column_space(&(&wd * dom));
    let qc = column_space(&(&wc * cod));
    let img = &a * &qd;
    let proj = &qc * (qc.adjoint() * &img);
    let containment_defect = max_abs(&(&img - proj));
    let restricted = qc.adjoint() * img;
    let sv = singular_values(&restricted);
    let rk = crate::linalg::rank(&restricted);
    let (dd, dc) = (qd.ncols(), qc.ncols());
    Ok(IndexReport {
        domain_dim: dd,
        codomain_dim: dc,
        singular_values: sv,
        ker: dd - rk,
        coker: dc - rk,
        index: dd as i64 - dc as i64,
        containment_defect,
    })
}

/// Dimensions and mutual overlaps of
/// `Im d ⊕ Im 𝓛* ⊕ 𝓗¹` and `Im 𝓛 ⊕ Im (d−θ)* ⊕ 𝓗^{2n−1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub domain_dims: [usize; 3],
    pub codomain_dims: [usize; 3],
    pub domain_total: usize,
    pub codomain_total: usize,
    pub max_overlap: f64,
}

fn overlap(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() == 0 || b.ncols() == 0 {
        return 0.0;
    }
    max_abs(&(a.adjoint() * b))
}

pub fn orthogonal_decomposition(lin: &Linearization, h: &HermitianStructure) -> Result<Decomposition> {
    let m = lin.forms;
    let r = lin.rank;
    let (a, wd, wc) = whitened(&lin.l)?;
    let g0 = h.gram(0)[(0, 0)].re.sqrt();
    let d0 = vcat(&[h.model().d_matrix(0).clone(), CMat::zeros(r, 1)]);
    let d0w = &wd * d0 / C64::new(g0, 0.0);
    let im_d = column_space(&d0w);
    let im_ls = column_space(&a.adjoint());
    let h1 = null_space(&vcat(&[a.clone(), d0w.adjoint()]));

    let gtop = h.gram(m)[(0, 0)].re.sqrt();
    let mut dt = CMat::zeros(1, m + r);
    dt.view_mut((0, 0), (1, m)).copy_from(&twisted_d_matrix(h, m - 1)?);
    let dtw = dt * whitener(&lin.l.gram_codomain)?.try_inverse().unwrap_or_else(|| wc.clone()) * C64::new(gtop, 0.0);
    let im_l = column_space(&a);
    let im_dts = column_space(&dtw.adjoint());
    let h2n1 = null_space(&vcat(&[dtw, a.adjoint()]));

    let max_overlap = [
        overlap(&im_d, &im_ls),
        overlap(&im_d, &h1),
        overlap(&im_ls, &h1),
        overlap(&im_l, &im_dts),
        overlap(&im_l, &h2n1),
        overlap(&im_dts, &h2n1),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let domain_dims = [im_d.ncols(), im_ls.ncols(), h1.ncols()];
    let codomain_dims = [im_l.ncols(), im_dts.ncols(), h2n1.ncols()];
    Ok(Decomposition {
        domain_dims,
        codomain_dims,
        domain_total: m + r,
        codomain_total: m + r,
        max_overlap,
    })
}

/// `max |𝓛_{rω,h}(rξ, s) − r^{n−1}𝓤′(ξ, s) − r^{n−2}𝓚′(ξ, s)|`, relative to
/// the size of the right-hand side, over the coordinate basis. Here `𝓤′`
/// keeps every `ξ` column of `𝓛` and the `𝓤` part of the gauge columns, and
/// `𝓚′` is the `𝓚` part of the gauge columns.
pub fn rescaling_defect(pair: &MetricPair, r: f64) -> Result<f64> {
    let lin = assemble_l(pair)?;
    let scaled = MetricPair::new(pair.cs.clone(), pair.omega.scale_re(r), pair.bundle.clone());
    let lin_r = assemble_l(&scaled)?;
    let m = lin.forms;
    let cols = m + lin.rank;
    let n = lin.n as i32;
    let mut lhs = lin_r.l.matrix.clone();
    for j in 0..m {
        let c = lhs.column(j) * C64::new(r, 0.0);
        lhs.set_column(j, &c);
    }
    let mut up = lin.u.matrix.clone();
    let mut kp = CMat::zeros(lhs.nrows(), cols);
    for j in 0..m {
        up.set_column(j, &lin.l.matrix.column(j));
    }
    for j in m..cols {
        kp.set_column(j, &lin.k.matrix.column(j));
    }
    let rhs = up * C64::new(r.powi(n - 1), 0.0) + kp * C64::new(r.powi(n - 2), 0.0);
    let scale = max_abs(&rhs).max(f64::MIN_POSITIVE);
    Ok(max_abs(&(lhs - rhs)) / scale)
}

/// Spectrum and rank data for serialization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub dims: [usize; 2],
    pub singular_values: Vec<f64>,
    pub ker: usize,
    pub coker: usize,
    pub index: i64,
    pub on_shell: bool,
    pub he_residual: f64,
}

pub fn spectrum_report(lin: &Linearization, h: &HermitianStructure) -> Result<SpectrumReport> {
    let idx = index_report(lin, h)?;
    Ok(SpectrumReport {
        dims: [idx.domain_dim, idx.codomain_dim],
        singular_values: idx.singular_values,
        ker: idx.ker,
        coker: idx.coker,
        index: idx.index,
        on_shell: lin.on_shell,
        he_residual: lin.he_residual,
    })
}
