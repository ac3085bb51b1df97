//! Residual evaluators for the equation systems.
//!
//! Every residual is an L² norm taken with the Hermitian form under test.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::algebroid::{metric_from_parameters, MetricPair};
use crate::error::{Error, Result};
use crate::gauge::{hermite_einstein_residual, Bundle, Reduction};
use crate::hermitian::{psi_squared, HermitianStructure, SUnStructure};
use crate::lie_exterior::Form;

/// Default tolerance for identities that hold exactly.
pub const EXACT_TOL: f64 = 1e-10;
/// Default tolerance for identities that go through quadrature.
pub const QUAD_TOL: f64 = 1e-8;

/// Per-equation residual norms with their tolerances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    pub tol: BTreeMap<String, f64>,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new() -> Self {
        ResidualReport {
            model: String::new(),
            params: BTreeMap::new(),
            residuals: BTreeMap::new(),
            tol: BTreeMap::new(),
            pass: true,
        }
    }

    pub fn with_meta(mut self, model: &str, params: &BTreeMap<String, f64>) -> Self {
        self.model = model.to_string();
        self.params = params.clone();
        self
    }

    pub fn push(&mut self, name: &str, value: f64, tol: f64) {
        self.residuals.insert(name.to_string(), value);
        self.tol.insert(name.to_string(), tol);
        self.pass = self
            .residuals
            .iter()
            .all(|(k, v)| v.is_finite() && *v <= self.tol[k]);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).copied()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().fold(0.0, |m, &v| m.max(v))
    }
}

impl Default for ResidualReport {
    fn default() -> Self {
        ResidualReport::new()
    }
}

fn top_or_zero(h: &HermitianStructure, a: &Form) -> Result<Form> {
    let model = h.model();
    if a.degree() >= model.dim() {
        return Ok(Form::zero(model.dim(), model.dim()));
    }
    model.d(a)
}

/// `‖dd^cω − c(F ∧ F)‖` for an arbitrary real `(1,1)`-form in place of `ω`.
fn anomaly_of(h: &HermitianStructure, omega: &Form, bundle: &Bundle) -> Result<f64> {
    let cs = h.complex_structure();
    let p = bundle.pontryagin(h.model())?;
    Ok(h.l2_norm(&(&cs.ddc(omega) - &p)))
}

/// Twisted Hull-Strominger system for `(Ψ, ω, θ)`:
/// `F ∧ ω^{n−1} = 0`, `dΨ = θ_ω ∧ Ψ`, `dθ_ω = 0`, `dd^cω = c(F ∧ F)`,
/// and `‖Ψ‖_ω = 1` when `normalized`.
pub fn twisted_hs_residual(
    h: &HermitianStructure,
    psi: &Form,
    bundle: &Bundle,
    normalized: bool,
    tol: Option<f64>,
) -> Result<ResidualReport> {
    let cs = h.complex_structure();
    SUnStructure::new(cs, psi.clone())?;
    let model = h.model();
    let t = tol.unwrap_or(EXACT_TOL);
    let lee = h.lee_form();
    let mut r = ResidualReport::new();
    r.push(
        "hermite_einstein",
        hermite_einstein_residual(&bundle.algebra, h, &bundle.theta)?,
        t,
    );
    r.push("dpsi", h.l2_norm(&(&model.d(psi)? - &lee.w(psi))), t);
    r.push("dtheta", h.l2_norm(&model.d(lee)?), t);
    r.push("anomaly", anomaly_of(h, h.omega(), bundle)?, t);
    if normalized {
        r.push("psi_norm", (h.psi_norm(psi)? - 1.0).abs(), t);
    }
    Ok(r)
}

/// Hull-Strominger system for `(ω, θ)` and a holomorphic volume form `Ω`:
/// `F ∧ ω^{n−1} = 0`, `d(‖Ω‖_ω ω^{n−1}) = 0`, `dd^cω = c(F ∧ F)`, together
/// with the equivalent `d*ω = d^c log‖Ω‖_ω`.
pub fn hs_residual(
    h: &HermitianStructure,
    omega_hol: &Form,
    bundle: &Bundle,
    tol: Option<f64>,
) -> Result<ResidualReport> {
    let cs = h.complex_structure();
    SUnStructure::new(cs, omega_hol.clone())?;
    let model = h.model();
    let d_omega = model.d(omega_hol)?.norm_max();
    if d_omega > EXACT_TOL * omega_hol.norm_max().max(1.0) {
        return Err(Error::Precondition(format!(
            "the volume form is not closed ({:.3e})",
            d_omega
        )));
    }
    let t = tol.unwrap_or(EXACT_TOL);
    let nrm = h.psi_norm(omega_hol)?;
    let wn1 = h.omega().pow(h.n() - 1)?;
    let mut r = ResidualReport::new();
    r.push(
        "hermite_einstein",
        hermite_einstein_residual(&bundle.algebra, h, &bundle.theta)?,
        t,
    );
    r.push(
        "conformally_balanced",
        h.l2_norm(&top_or_zero(h, &wn1.scale_re(nrm))?),
        t,
    );
    // log‖Ω‖ is constant on invariant data, so its d^c vanishes.
    r.push("dstar_omega", h.l2_norm(&h.codifferential(h.omega())), t);
    r.push("anomaly", anomaly_of(h, h.omega(), bundle)?, t);
    Ok(r)
}

/// Calabi system for `(ω, h)` with reference volume `μ`:
/// `F ∧ ω^{n−1} = 0` and `d(e^{−f}ω^{n−1}) = 0`, the latter also in the form
/// `θ_ω = df_ω`.
pub fn calabi_residual(
    h: &HermitianStructure,
    bundle: &Bundle,
    tol: Option<f64>,
) -> Result<ResidualReport> {
    let t = tol.unwrap_or(EXACT_TOL);
    let f = h.dilaton_function()?;
    let wn1 = h.omega().pow(h.n() - 1)?;
    let mut r = ResidualReport::new();
    r.push(
        "hermite_einstein",
        hermite_einstein_residual(&bundle.algebra, h, &bundle.theta)?,
        t,
    );
    r.push(
        "conformally_balanced",
        h.l2_norm(&top_or_zero(h, &wn1.scale_re((-f).exp()))?),
        t,
    );
    // f is constant on invariant data, so df = 0.
    r.push("lee_minus_df", h.l2_norm(h.lee_form()), t);
    Ok(r)
}

/// The Calabi system in the parametrized form, at `ω = ω₀ + 2(dξ)^{1,1} + R̃(h, h₀)`.
pub fn calabi_residual_params(
    base: &MetricPair,
    mu: &Form,
    xi: &Form,
    path: &Reduction,
    tol: Option<f64>,
) -> Result<ResidualReport> {
    let pair = metric_from_parameters(base, xi, path)?;
    if !pair.positive {
        return Err(Error::NotPositive(String::from(
            "the parametrized form is not positive",
        )));
    }
    let h = pair.hermitian(mu)?;
    let t = tol.unwrap_or(QUAD_TOL);
    calabi_residual(&h, &pair.bundle, Some(t))
}

/// `λ = 2(n−1)/(n−2)` and `γ = (n−2)/n`.
pub fn appendix_constants(n: usize) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::Precondition(format!(
            "the appendix constants need n >= 3, got n = {}",
            n
        )));
    }
    let nf = n as f64;
    Ok((2.0 * (nf - 1.0) / (nf - 2.0), (nf - 2.0) / nf))
}

/// `‖dd^cτ₀ − c(F₀ ∧ F₀)‖_max`.
pub fn tau0_defect(h: &HermitianStructure, tau0: &Form, bundle0: &Bundle) -> Result<f64> {
    let p = bundle0.pontryagin(h.model())?;
    Ok((&h.complex_structure().ddc(tau0) - &p).norm_max())
}

/// Critical-point equations of the appendix functional at `(ω, h = e^u h₀)`:
/// `F ∧ ω^{n−1} = 0`, `dω^{n−1} = 0`, `dd^c(e^{(λ−2)f}ω) = c(F ∧ F)`.
pub fn appendix_residual(
    h: &HermitianStructure,
    base: &Bundle,
    path: &Reduction,
    tau0: &Form,
    tol: Option<f64>,
) -> Result<ResidualReport> {
    let n = h.n();
    let (lambda, _) = appendix_constants(n)?;
    let defect = tau0_defect(h, tau0, base)?;
    if defect > QUAD_TOL {
        return Err(Error::Precondition(format!(
            "dd^c tau0 = c(F0 ^ F0) fails by {:.3e}",
            defect
        )));
    }
    let t = tol.unwrap_or(EXACT_TOL);
    let bundle = base.reduced(h.complex_structure(), path);
    let f = h.dilaton_function()?;
    let wn1 = h.omega().pow(n - 1)?;
    let mut r = ResidualReport::new();
    r.push(
        "hermite_einstein",
        hermite_einstein_residual(&bundle.algebra, h, &bundle.theta)?,
        t,
    );
    r.push("balanced", h.l2_norm(&top_or_zero(h, &wn1)?), t);
    r.push(
        "anomaly",
        anomaly_of(h, &h.omega().scale_re(((lambda - 2.0) * f).exp()), &bundle)?,
        t,
    );
    Ok(r)
}

/// `ω' = e^{2f/(n−2)} ω`, the Hull-Strominger metric attached to appendix
/// critical data.
pub fn appendix_to_hs(h: &HermitianStructure) -> Result<HermitianStructure> {
    let n = h.n();
    appendix_constants(n)?;
    let f = h.dilaton_function()?;
    h.with_omega(h.omega().scale_re((2.0 * f / (n as f64 - 2.0)).exp()))
}

/// `ω̃ = ‖Ω‖_ω^{1/(n−1)} ω`, with `μ` reset to the volume form of `Ω`.
pub fn hs_to_appendix(h: &HermitianStructure, omega_hol: &Form) -> Result<HermitianStructure> {
    let n = h.n();
    appendix_constants(n)?;
    let nrm = h.psi_norm(omega_hol)?;
    let mu = psi_squared(omega_hol, n)?;
    HermitianStructure::new(
        h.cs_arc(),
        h.omega().scale_re(nrm.powf(1.0 / (n as f64 - 1.0))),
        Some(mu),
    )
}

/// Hull-Strominger residuals of the conformal image of appendix critical data.
/// `μ` of `h` must be the volume form of `Ω`.
pub fn appendix_bridge(
    h: &HermitianStructure,
    bundle: &Bundle,
    omega_hol: &Form,
    tol: Option<f64>,
) -> Result<ResidualReport> {
    let hp = appendix_to_hs(h)?;
    hs_residual(&hp, omega_hol, bundle, Some(tol.unwrap_or(QUAD_TOL)))
}
