//! Built-in catalog of invariant models with their known structures.
//!
//! Indices here are 0-based: the Hopf generators `e^1..e^4` of the usual
//! presentation are `e0..e3`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gauge::{Bundle, GaugeAlgebra, VForm};
use crate::hermitian::{psi_squared, ComplexStructure, HermitianStructure};
use crate::lie_exterior::{Form, LieModel};
use crate::linalg::{expm, CVec, RMat, C64, I};

pub const CATALOG: [&str; 5] = ["hopf", "torus4", "torus6", "su2_r3", "h3"];

/// Parameters accepted by [`load`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Complex structure parameter `w = x + iy` of the Hopf family.
    pub w: C64,
    pub a: f64,
    /// Defaults to the solution value `a/x`.
    pub t: Option<f64>,
    pub volume: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            w: C64::new(1.0, 0.0),
            a: 1.0,
            t: None,
            volume: 1.0,
        }
    }
}

impl ModelParams {
    pub fn t(&self) -> f64 {
        self.t.unwrap_or(self.a / self.w.re)
    }
}

/// A model with a complex structure, a Hermitian form, an `(n,0)`-form,
/// a reference volume and a bundle.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub model: Arc<LieModel>,
    pub cs: Arc<ComplexStructure>,
    pub omega: Form,
    pub psi: Form,
    pub mu: Form,
    pub bundle: Bundle,
    pub notes: String,
}

impl CatalogEntry {
    pub fn hermitian(&self) -> Result<HermitianStructure> {
        HermitianStructure::new(self.cs.clone(), self.omega.clone(), Some(self.mu.clone()))
    }

    pub fn with_omega(&self, omega: Form) -> CatalogEntry {
        CatalogEntry {
            omega,
            ..self.clone()
        }
    }

    pub fn with_bundle(&self, bundle: Bundle) -> CatalogEntry {
        CatalogEntry {
            bundle,
            ..self.clone()
        }
    }

    /// `Ψ/‖Ψ‖_ω`.
    pub fn normalized_psi(&self) -> Result<Form> {
        let nrm = self.hermitian()?.psi_norm(&self.psi)?;
        if nrm == 0.0 {
            return Err(Error::NotPositive(String::from("psi vanishes")));
        }
        Ok(self.psi.scale_re(1.0 / nrm))
    }
}

/// Loads a catalog entry by name.
pub fn load(name: &str, p: &ModelParams) -> Result<CatalogEntry> {
    match name {
        "hopf" => hopf(p.w, p.a, p.t(), p.volume),
        "torus4" | "torus" => torus(2, p.volume),
        "torus6" => torus(3, p.volume),
        "su2_r3" => su2_r3(p.w, p.a, p.t(), p.volume),
        "h3" => h3(p.volume),
        _ => Err(Error::Unknown {
            kind: "model",
            name: name.to_string(),
        }),
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Precondition(format!("{} must be positive, got {}", name, v)));
    }
    Ok(())
}

/// `𝔲(2)` presented as `de0 = e12, de1 = e20, de2 = e01, de3 = 0`, oriented by `e^{3012}`.
pub fn hopf_model(volume: f64) -> Result<LieModel> {
    LieModel::from_terms(
        4,
        &[
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
        ],
        vec![3, 0, 1, 2],
        volume,
    )
}

/// `J_w` on covectors: `η¹ = i e0 + w e3` and `η² = e1 + i e2` span the (1,0)-forms.
pub fn hopf_j(w: C64) -> RMat {
    let (x, y) = (w.re, w.im);
    let mut j = RMat::zeros(4, 4);
    j[(2, 1)] = 1.0;
    j[(1, 2)] = -1.0;
    j[(0, 3)] = 1.0 / x;
    j[(3, 3)] = y / x;
    j[(0, 0)] = -y / x;
    j[(3, 0)] = -(x + y * y / x);
    j
}

pub fn hopf_eta1(w: C64) -> Form {
    &Form::e(4, 0).scale(I) + &Form::e(4, 3).scale(w)
}

pub fn hopf_eta2() -> Form {
    &Form::e(4, 1) + &Form::e(4, 2).scale(I)
}

/// `ω_t = a e^{30} + t e^{12}`.
pub fn hopf_omega(a: f64, t: f64) -> Form {
    let mut w = Form::zero(4, 2);
    w.add_term(&[3, 0], C64::new(a, 0.0));
    w.add_term(&[1, 2], C64::new(t, 0.0));
    w
}

/// `Ψ_w = η¹ ∧ η²`.
pub fn hopf_psi(w: C64) -> Form {
    hopf_eta1(w).w(&hopf_eta2())
}

pub fn hopf(w: C64, a: f64, t: f64, volume: f64) -> Result<CatalogEntry> {
    check_positive("x = Re w", w.re)?;
    check_positive("a", a)?;
    check_positive("t", t)?;
    check_positive("volume", volume)?;
    let model = Arc::new(hopf_model(volume)?);
    let cs = Arc::new(ComplexStructure::new(model.clone(), hopf_j(w))?);
    let psi = hopf_psi(w);
    let mu = psi_squared(&psi, 2)?;
    let mut params = BTreeMap::new();
    params.insert(String::from("x"), w.re);
    params.insert(String::from("y"), w.im);
    params.insert(String::from("a"), a);
    params.insert(String::from("t"), t);
    params.insert(String::from("volume"), volume);
    Ok(CatalogEntry {
        name: String::from("hopf"),
        params,
        model,
        cs,
        omega: hopf_omega(a, t),
        psi,
        mu,
        bundle: Bundle::trivial(GaugeAlgebra::su2(1.0), 4),
        notes: String::from("diagonal Hopf surface S^3 x S^1 with complex structure J_w"),
    })
}

/// Whether the Aeppli class `a[e^{30}]` of the Hopf algebroid has a positive
/// representative. `e^{12}` is exact, so the class only sees `Re a`.
pub fn hopf_class_positive(w: C64, a: C64) -> bool {
    let Ok(model) = hopf_model(1.0) else { return false };
    let model = Arc::new(model);
    let Ok(cs) = ComplexStructure::new(model, hopf_j(w)) else { return false };
    let cs = Arc::new(cs);
    let mut omega = Form::zero(4, 2);
    omega.add_term(&[3, 0], C64::new(a.re, 0.0));
    omega.add_term(&[1, 2], C64::new(1.0, 0.0));
    HermitianStructure::new(cs, omega, None).is_ok()
}

/// Flat torus `ℝ^{2n}` with `J e^{2k} = e^{2k+1}`.
pub fn torus_j(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

pub fn torus(n: usize, volume: f64) -> Result<CatalogEntry> {
    check_positive("volume", volume)?;
    let m = 2 * n;
    let model = Arc::new(LieModel::abelian(m, volume)?);
    let cs = Arc::new(ComplexStructure::new(model.clone(), torus_j(n))?);
    let mut omega = Form::zero(m, 2);
    let mut psi = Form::constant(m, C64::new(1.0, 0.0));
    for k in 0..n {
        omega.add_term(&[2 * k, 2 * k + 1], C64::new(1.0, 0.0));
        psi = psi.w(&(&Form::e(m, 2 * k) + &Form::e(m, 2 * k + 1).scale(I)));
    }
    let mu = psi_squared(&psi, n)?;
    let mut params = BTreeMap::new();
    params.insert(String::from("n"), n as f64);
    params.insert(String::from("volume"), volume);
    Ok(CatalogEntry {
        name: format!("torus{}", m),
        params,
        model,
        cs,
        omega,
        psi,
        mu,
        bundle: Bundle::trivial(GaugeAlgebra::su2(1.0), m),
        notes: String::from("flat torus with the standard complex structure"),
    })
}

/// Hopf surface times a flat complex line, `𝔰𝔲(2) ⊕ ℝ ⊕ ℝ²`.
pub fn su2_r3(w: C64, a: f64, t: f64, volume: f64) -> Result<CatalogEntry> {
    check_positive("x = Re w", w.re)?;
    check_positive("a", a)?;
    check_positive("t", t)?;
    check_positive("volume", volume)?;
    let model = Arc::new(LieModel::from_terms(
        6,
        &[
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
        ],
        vec![3, 0, 1, 2, 4, 5],
        volume,
    )?);
    let mut j = RMat::zeros(6, 6);
    j.view_mut((0, 0), (4, 4)).copy_from(&hopf_j(w));
    j[(5, 4)] = 1.0;
    j[(4, 5)] = -1.0;
    let cs = Arc::new(ComplexStructure::new(model.clone(), j)?);
    let lift = |f: &Form| {
        let mut g = Form::zero(6, f.degree());
        for (idx, c) in f.terms() {
            g.add_term(&idx, c);
        }
        g
    };
    let mut omega = lift(&hopf_omega(a, t));
    omega.add_term(&[4, 5], C64::new(1.0, 0.0));
    let psi = lift(&hopf_psi(w)).w(&(&Form::e(6, 4) + &Form::e(6, 5).scale(I)));
    let mu = psi_squared(&psi, 3)?;
    let mut params = BTreeMap::new();
    params.insert(String::from("x"), w.re);
    params.insert(String::from("y"), w.im);
    params.insert(String::from("a"), a);
    params.insert(String::from("t"), t);
    params.insert(String::from("volume"), volume);
    Ok(CatalogEntry {
        name: String::from("su2_r3"),
        params,
        model,
        cs,
        omega,
        psi,
        mu,
        bundle: Bundle::trivial(GaugeAlgebra::su2(1.0), 6),
        notes: String::from(
            "SU(2) x R^3; the Z^3 quotient changes topology only, not invariant data",
        ),
    })
}

/// Nilpotent `𝔥₃`: `de5 = e01 − e23`, with the balanced metric `e01 + e23 + e45`.
pub fn h3(volume: f64) -> Result<CatalogEntry> {
    check_positive("volume", volume)?;
    let model = Arc::new(LieModel::from_terms(
        6,
        &[(5, 0, 1, 1.0), (5, 2, 3, -1.0)],
        vec![0, 1, 2, 3, 4, 5],
        volume,
    )?);
    let cs = Arc::new(ComplexStructure::new(model.clone(), torus_j(3))?);
    let mut omega = Form::zero(6, 2);
    let mut psi = Form::constant(6, C64::new(1.0, 0.0));
    for k in 0..3 {
        omega.add_term(&[2 * k, 2 * k + 1], C64::new(1.0, 0.0));
        psi = psi.w(&(&Form::e(6, 2 * k) + &Form::e(6, 2 * k + 1).scale(I)));
    }
    let mu = psi_squared(&psi, 3)?;
    let mut params = BTreeMap::new();
    params.insert(String::from("volume"), volume);
    Ok(CatalogEntry {
        name: String::from("h3"),
        params,
        model,
        cs,
        omega,
        psi,
        mu,
        bundle: Bundle::trivial(GaugeAlgebra::su2(1.0), 6),
        notes: String::from("nilmanifold; structure constants and smoke tests only"),
    })
}

/// `θ = Σ_a T_a (X_a η̄ + conj(X_a) η)` for a (1,0)-form `η`: a 𝔨-valued
/// connection whose (0,1)-part is `X ⊗ η̄`.
pub fn unitary_connection(x: &[C64], eta: &Form) -> VForm {
    let comps = x
        .iter()
        .map(|&z| &eta.conj().scale(z) + &eta.scale(z.conj()))
        .collect();
    VForm::from_comps(comps).expect("nonempty")
}

/// `θ = Σ_j Σ_a T_a (X^j_a η̄_j + conj(X^j_a) η_j)`: the 𝔨-valued connection
/// with `θ^{0,1} = Σ_j X^j ⊗ η̄_j`.
pub fn unitary_connection_multi(terms: &[(Vec<C64>, Form)]) -> VForm {
    let mut acc = unitary_connection(&terms[0].0, &terms[0].1);
    for (x, eta) in &terms[1..] {
        acc = &acc + &unitary_connection(x, eta);
    }
    acc
}

/// SU(2) bundle over the Hopf surface with the single-term connection
/// `θ^{0,1} = X ⊗ η̄¹`. Here `c(F ∧ F) = 0` for every `X`.
pub fn hopf_su2_bundle(w: C64, x: [C64; 3], scale: f64) -> Bundle {
    Bundle::new(GaugeAlgebra::su2(scale), unitary_connection(&x, &hopf_eta1(w)))
        .expect("matching ranks")
}

/// SU(2) bundle over the Hopf surface with `θ^{0,1} = X ⊗ η̄¹ + Y ⊗ η̄²`,
/// `X = −(iw/2x) T_2` and `Y = y (T_0 + i T_1)`, conjugated by `exp(rot)`.
/// `F^{0,2} = 0` because `[X, Y] = −(w/2x) Y`, and `c(F ∧ F) ≠ 0` for `y ≠ 0`.
pub fn hopf_su2_curved_bundle(w: C64, y: C64, rot: [f64; 3], scale: f64) -> Bundle {
    let alg = GaugeAlgebra::su2(scale);
    let r: Vec<C64> = rot.iter().map(|&v| C64::new(v, 0.0)).collect();
    let g = expm(&alg.ad(&r));
    let rotate = |v: [C64; 3]| -> Vec<C64> {
        (&g * CVec::from_column_slice(&v)).iter().copied().collect()
    };
    let x = rotate([C64::new(0.0, 0.0), C64::new(0.0, 0.0), -I * w / (2.0 * w.re)]);
    let yv = rotate([y, y * I, C64::new(0.0, 0.0)]);
    let theta = unitary_connection_multi(&[(x, hopf_eta1(w)), (yv, hopf_eta2())]);
    Bundle::new(alg, theta).expect("matching ranks")
}

fn torus_eta(m: usize, k: usize) -> Form {
    &Form::e(m, 2 * k) + &Form::e(m, 2 * k + 1).scale(I)
}

/// Flat SU(2) bundle on a torus: `θ = T_2 ⊗ (z η̄⁰ + z̄ η⁰)`.
pub fn torus_flat_bundle(n: usize, z: C64) -> Bundle {
    let x = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), z];
    Bundle::new(GaugeAlgebra::su2(1.0), unitary_connection(&x, &torus_eta(2 * n, 0)))
        .expect("matching ranks")
}

/// Non-flat SU(2) bundle on a torus with `θ^{0,1} = X ⊗ η̄⁰`; curved when
/// `[X, X̄] ≠ 0`.
pub fn torus_su2_bundle(n: usize, x: [C64; 3]) -> Bundle {
    Bundle::new(GaugeAlgebra::su2(1.0), unitary_connection(&x, &torus_eta(2 * n, 0)))
        .expect("matching ranks")
}

/// `𝔰𝔲(2) ⊕ 𝔰𝔲(2)` with `c = α(−tr) ⊕ α(tr)` and the same connection on
/// both factors, so that `c(F ∧ F) = 0`.
pub fn torus_double_su2_bundle(n: usize, x: [C64; 3], alpha: f64) -> Bundle {
    let alg = GaugeAlgebra::su2(alpha).direct_sum(&GaugeAlgebra::su2(-alpha));
    let eta = torus_eta(2 * n, 0);
    let single = unitary_connection(&x, &eta);
    let mut comps: Vec<Form> = single.comps().to_vec();
    comps.extend(single.comps().iter().cloned());
    Bundle::new(alg, VForm::from_comps(comps).expect("nonempty")).expect("matching ranks")
}

/// SU(2) bundle over `𝔥₃` with `θ^{0,1} = N ⊗ β̄`, `N = T_0 + i T_1` and
/// `β̄ = Σ_k x_k η̄_k`, conjugated by `exp(rot)`. `F^{0,2} = 0` since `[N, N] = 0`
/// and `dη̄_k` has no (0,2)-part; `c(F ∧ F) ≠ 0` when `x_2 ≠ 0`.
pub fn h3_su2_bundle(x: [C64; 3], rot: [f64; 3], scale: f64) -> Bundle {
    let alg = GaugeAlgebra::su2(scale);
    let r: Vec<C64> = rot.iter().map(|&v| C64::new(v, 0.0)).collect();
    let g = expm(&alg.ad(&r));
    let n: Vec<C64> = (&g * CVec::from_column_slice(&[C64::new(1.0, 0.0), I, C64::new(0.0, 0.0)]))
        .iter()
        .copied()
        .collect();
    let terms: Vec<(Vec<C64>, Form)> = (0..3)
        .map(|k| (n.iter().map(|z| z * x[k]).collect(), torus_eta(6, k)))
        .collect();
    Bundle::new(alg, unitary_connection_multi(&terms)).expect("matching ranks")
}
