//! The dilaton functional, its variations along parametrized paths, concave
//! paths, and the appendix functional on balanced metrics.

use serde::Serialize;

use crate::algebroid::{metric_from_parameters, real_11_basis, MetricPair};
use crate::error::{Error, Result};
use crate::gauge::{curvature, del_h, donaldson_r, Bundle, GaugeAlgebra, Reduction, VForm};
use crate::hermitian::HermitianStructure;
use crate::lie_exterior::Form;
use crate::linalg::{factorial, lstsq, CVec, C64, I};
use crate::systems::appendix_constants;

/// Central-difference steps, finest last.
pub const FD_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Relative agreement floor, as a fraction of the functional value.
pub const AGREEMENT_FLOOR: f64 = 1e-3;

/// A Richardson-extrapolated finite difference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdEstimate {
    pub value: f64,
    pub steps: Vec<f64>,
    pub raw: Vec<f64>,
    /// Order of the leading error term after extrapolation.
    pub richardson_order: usize,
    /// Difference between the two extrapolants.
    pub error_estimate: f64,
}

fn richardson(steps: &[f64], raw: Vec<f64>) -> FdEstimate {
    let r12 = (4.0 * raw[1] - raw[0]) / 3.0;
    let r23 = (4.0 * raw[2] - raw[1]) / 3.0;
    FdEstimate {
        value: r23,
        steps: steps.to_vec(),
        raw,
        richardson_order: 4,
        error_estimate: (r23 - r12).abs(),
    }
}

/// First derivative at 0 by central differences on [`FD_STEPS`].
pub fn fd_first(f: impl Fn(f64) -> Result<f64>) -> Result<FdEstimate> {
    let mut raw = Vec::new();
    for &h in &FD_STEPS {
        raw.push((f(h)? - f(-h)?) / (2.0 * h));
    }
    Ok(richardson(&FD_STEPS, raw))
}

/// Second derivative at 0 by central differences on [`FD_STEPS`].
pub fn fd_second(f: impl Fn(f64) -> Result<f64>) -> Result<FdEstimate> {
    let f0 = f(0.0)?;
    let mut raw = Vec::new();
    for &h in &FD_STEPS {
        raw.push((f(h)? - 2.0 * f0 + f(-h)?) / (h * h));
    }
    Ok(richardson(&FD_STEPS, raw))
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn agreement(a: f64, b: f64, floor: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / a.abs().max(b.abs()).max(floor)
}

/// The two expressions `∫ e^{−f} ωⁿ/n!` and `∫ e^{f} μ`.
pub fn dilaton_functional_parts(h: &HermitianStructure) -> Result<(f64, f64)> {
    let f = h.dilaton_function()?;
    let model = h.model();
    let by_volume = (-f).exp() * h.total_volume();
    let by_mu = f.exp() * model.integrate_top(h.mu())?.re;
    Ok((by_volume, by_mu))
}

/// `M = ∫ e^{−f_ω} ωⁿ/n!`, checked against `∫ e^{f_ω} μ`.
pub fn dilaton_functional(h: &HermitianStructure) -> Result<f64> {
    let (a, b) = dilaton_functional_parts(h)?;
    if agreement(a, b, 0.0) > 1e-12 {
        return Err(Error::Inconsistent((a - b).abs()));
    }
    Ok(a)
}

/// `M` at a metric pair; fails when `ω` is not positive.
pub fn pair_functional(pair: &MetricPair, mu: &Form) -> Result<f64> {
    if !pair.positive {
        return Err(Error::NotPositive(String::from("omega is not positive")));
    }
    dilaton_functional(&pair.hermitian(mu)?)
}

/// `d^θ A = dA + [θ ∧ A]`.
fn covariant_d(alg: &GaugeAlgebra, h: &HermitianStructure, theta: &VForm, a: &VForm) -> Result<VForm> {
    Ok(&a.d(h.model())? + &alg.bracket_wedge(theta, a)?)
}

/// `2(dξ)^{1,1}`.
fn twice_d11(h: &HermitianStructure, xi: &Form) -> Result<Form> {
    Ok(h.complex_structure().project(&h.model().d(xi)?, 1, 1).scale_re(2.0))
}

/// `i c(u, F)`, real part.
fn ic(alg: &GaugeAlgebra, u: &[C64], f: &VForm) -> Form {
    alg.c_with(u, f).scale(I).re()
}

/// A path `ξ(t) = tξ₁ + t²ξ₂/2`, `h_t = e^{tu} h₀` through a base pair.
#[derive(Clone, Debug)]
pub struct ParamPath {
    pub base: MetricPair,
    pub mu: Form,
    pub xi1: Form,
    pub xi2: Form,
    pub u: Reduction,
}

/// The state of a path at one time.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub t: f64,
    pub pair: MetricPair,
    pub h: HermitianStructure,
    pub omega_dot: Form,
    pub omega_ddot: Form,
    /// Primitive part of `ω̇`.
    pub sigma: Form,
    /// `Λ ω̇`, so that `ω̇ = σ + β ω/n`.
    pub beta: f64,
    pub value: f64,
}

impl PathSample {
    fn weight(&self) -> f64 {
        0.5 * (-self.h.dilaton_function().unwrap_or(0.0)).exp() * self.h.total_volume()
    }

    /// `dM/dt = ½ ∫ e^{−f} Λω̇ ωⁿ/n!`.
    pub fn first_variation(&self) -> f64 {
        self.weight() * self.beta
    }

    /// `d²M/dt² = ½ ∫ e^{−f} (Λω̈ − |σ|² + (n−2)/(2n) β²) ωⁿ/n!`.
    pub fn second_variation(&self) -> f64 {
        let n = self.h.n() as f64;
        let lw = self.h.trace(&self.omega_ddot).re;
        self.weight() * (lw - self.h.norm2(&self.sigma) + (n - 2.0) / (2.0 * n) * self.beta * self.beta)
    }

    /// `Λω̈ + (n−2)/(2n) β²`, zero exactly on concave paths.
    pub fn concave_residual(&self) -> f64 {
        let n = self.h.n() as f64;
        self.h.trace(&self.omega_ddot).re + (n - 2.0) / (2.0 * n) * self.beta * self.beta
    }

    pub fn primitivity_defect(&self) -> f64 {
        self.h.trace(&self.sigma).norm()
    }
}

impl ParamPath {
    /// Straight path in `ξ` with no acceleration.
    pub fn linear(base: MetricPair, mu: Form, xi: Form, u: Reduction) -> Self {
        let dim = xi.dim();
        ParamPath {
            base,
            mu,
            xi1: xi,
            xi2: Form::zero(dim, 1),
            u,
        }
    }

    pub fn xi_at(&self, t: f64) -> Form {
        &self.xi1.scale_re(t) + &self.xi2.scale_re(0.5 * t * t)
    }

    pub fn pair_at(&self, t: f64) -> Result<MetricPair> {
        metric_from_parameters(&self.base, &self.xi_at(t), &self.u.scaled(t))
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        pair_functional(&self.pair_at(t)?, &self.mu)
    }

    pub fn sample(&self, t: f64) -> Result<PathSample> {
        let pair = self.pair_at(t)?;
        if !pair.positive {
            return Err(Error::NotPositive(format!("omega is not positive at t = {}", t)));
        }
        let h = pair.hermitian(&self.mu)?;
        let alg = &pair.bundle.algebra;
        let theta = &pair.bundle.theta;
        let u = &self.u.u;
        let f = curvature(alg, h.model(), theta)?;
        let xi_dot = &self.xi1 + &self.xi2.scale_re(t);
        let omega_dot = &twice_d11(&h, &xi_dot)? + &ic(alg, u, &f);
        let fdot = covariant_d(alg, &h, theta, &del_h(alg, h.complex_structure(), theta, u))?;
        let omega_ddot = &twice_d11(&h, &self.xi2)? + &ic(alg, u, &fdot);
        let (sigma, beta) = h.lefschetz_split(&omega_dot);
        let value = dilaton_functional(&h)?;
        Ok(PathSample {
            t,
            pair,
            h,
            omega_dot,
            omega_ddot,
            sigma,
            beta: beta.re,
            value,
        })
    }
}

/// `δM` in the direction `(ξ, u)`.
pub fn first_variation(pair: &MetricPair, mu: &Form, xi: &Form, u: &Reduction) -> Result<f64> {
    let path = ParamPath::linear(pair.clone(), mu.clone(), xi.clone(), u.clone());
    Ok(path.sample(0.0)?.first_variation())
}

/// `d²M/dt²` at a sample.
pub fn second_variation(sample: &PathSample) -> f64 {
    sample.second_variation()
}

/// Analytic and finite-difference variations at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationReport {
    pub value: f64,
    pub first_analytic: f64,
    pub first_fd: FdEstimate,
    pub first_rel_err: f64,
    pub second_analytic: f64,
    pub second_fd: FdEstimate,
    pub second_rel_err: f64,
}

pub fn variation_report(path: &ParamPath) -> Result<VariationReport> {
    let s = path.sample(0.0)?;
    let first_fd = fd_first(|t| path.value_at(t))?;
    let second_fd = fd_second(|t| path.value_at(t))?;
    let (a1, a2) = (s.first_variation(), s.second_variation());
    let floor = AGREEMENT_FLOOR * s.value.abs();
    Ok(VariationReport {
        value: s.value,
        first_analytic: a1,
        first_rel_err: agreement(a1, first_fd.value, floor),
        first_fd,
        second_analytic: a2,
        second_rel_err: agreement(a2, second_fd.value, floor),
        second_fd,
    })
}

/// `P = Λ_ω 2i∂̄∂` on invariant functions, as a 1×1 matrix. Constants are
/// annihilated, so it vanishes on invariant data.
pub fn p_operator(h: &HermitianStructure) -> f64 {
    let cs = h.complex_structure();
    let one = h.model().one();
    h.trace(&cs.delbar(&cs.del(&one)).scale(C64::new(0.0, 2.0))).re
}

/// Discrete concave-path residuals `Λ_kω̈_k + (n−2)/(2n) β_k²` at the interior
/// points of a uniformly spaced path.
pub fn concave_path_residual(ts: &[f64], hs: &[HermitianStructure]) -> Result<Vec<f64>> {
    if ts.len() < 3 || hs.len() != ts.len() {
        return Err(Error::Precondition(String::from(
            "a concave-path check needs at least 3 samples",
        )));
    }
    let dt = ts[1] - ts[0];
    for w in ts.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.abs().max(1.0) {
            return Err(Error::Precondition(String::from("samples must be uniformly spaced")));
        }
    }
    let n = hs[0].n() as f64;
    let c = (n - 2.0) / (2.0 * n);
    let mut out = Vec::with_capacity(ts.len() - 2);
    for k in 1..ts.len() - 1 {
        let acc = &(&hs[k + 1].omega().clone() - &hs[k].omega().scale_re(2.0)) + hs[k - 1].omega();
        let vel = hs[k + 1].omega() - hs[k - 1].omega();
        let lw = hs[k].trace(&acc).re / (dt * dt);
        let beta = hs[k].trace(&vel).re / (2.0 * dt);
        out.push(lw + c * beta * beta);
    }
    Ok(out)
}

/// Discrete `d²M/dt²` at the interior points.
pub fn discrete_second_difference(ts: &[f64], values: &[f64]) -> Vec<f64> {
    if ts.len() < 3 {
        return Vec::new();
    }
    let dt = ts[1] - ts[0];
    values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (dt * dt))
        .collect()
}

/// A sampled path with its `ξ` values and metrics.
#[derive(Clone, Debug)]
pub struct ConcavePath {
    pub ts: Vec<f64>,
    pub xis: Vec<Form>,
    pub hs: Vec<HermitianStructure>,
    pub values: Vec<f64>,
    /// Balancing coefficients used at the interior points.
    pub lambdas: Vec<f64>,
}

impl ConcavePath {
    pub fn residuals(&self) -> Result<Vec<f64>> {
        concave_path_residual(&self.ts, &self.hs)
    }

    pub fn second_differences(&self) -> Vec<f64> {
        discrete_second_difference(&self.ts, &self.values)
    }
}

/// Integrates the discrete concave-path equation with `h_t = e^{tu}h₀`,
/// `ξ₀ = 0`, `ξ₁ = Δt·v` and `ξ_{k+1} = 2ξ_k − ξ_{k−1} + Δt² λ_k ζ`, where
/// `λ_k` zeroes the residual at step `k`.
pub fn generate_concave_path(
    base: &MetricPair,
    mu: &Form,
    velocity: &Form,
    zeta: &Form,
    u: &Reduction,
    t_max: f64,
    samples: usize,
) -> Result<ConcavePath> {
    if samples < 3 {
        return Err(Error::Precondition(String::from(
            "a concave path needs at least 3 samples",
        )));
    }
    let dt = t_max / (samples - 1) as f64;
    let ts: Vec<f64> = (0..samples).map(|k| k as f64 * dt).collect();
    let at = |k: usize, xi: &Form| -> Result<HermitianStructure> {
        let pair = metric_from_parameters(base, xi, &u.scaled(ts[k]))?;
        if !pair.positive {
            return Err(Error::NotPositive(format!("path leaves the positive cone at t = {}", ts[k])));
        }
        pair.hermitian(mu)
    };
    let dim = velocity.dim();
    let mut xis = vec![Form::zero(dim, 1), velocity.scale_re(dt)];
    let mut hs = vec![at(0, &xis[0])?, at(1, &xis[1])?];
    let mut lambdas = Vec::new();
    let n = hs[0].n() as f64;
    let c = (n - 2.0) / (2.0 * n);
    for k in 1..samples - 1 {
        let trial = &(&xis[k].scale_re(2.0) - &xis[k - 1]) + &Form::zero(dim, 1);
        let h_trial = at(k + 1, &trial)?;
        let hk = &hs[k];
        let dz = twice_d11(hk, zeta)?;
        let acc = &(&h_trial.omega().clone() - &hk.omega().scale_re(2.0)) + hs[k - 1].omega();
        let vel = h_trial.omega() - hs[k - 1].omega();
        let a = hk.trace(&acc).re / (dt * dt);
        let b = hk.trace(&dz).re;
        let cb = hk.trace(&vel).re / (2.0 * dt);
        let db = b * dt / 2.0;
        if b.abs() < 1e-14 {
            return Err(Error::Precondition(String::from(
                "the balancing direction has no trace",
            )));
        }
        // a + λb + c(cb + λ db)² = 0
        let lambda = if c == 0.0 {
            -a / b
        } else {
            let qa = c * db * db;
            let qb = b + 2.0 * c * cb * db;
            let qc = a + c * cb * cb;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return Err(Error::Inconsistent(disc));
            }
            // root continuous with −qc/qb as qa → 0
            let q = -0.5 * (qb + qb.signum() * disc.sqrt());
            qc / q
        };
        let next = &trial + &zeta.scale_re(dt * dt * lambda);
        hs.push(at(k + 1, &next)?);
        xis.push(next);
        lambdas.push(lambda);
    }
    let values = hs.iter().map(dilaton_functional).collect::<Result<Vec<_>>>()?;
    Ok(ConcavePath {
        ts,
        xis,
        hs,
        values,
        lambdas,
    })
}

/// One row of a sweep table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub m: f64,
    pub dm: f64,
    pub d2m: f64,
    pub residual: f64,
}

/// `M` with analytic derivatives along `s ↦ (ω₀ + 2s(dξ)^{1,1} + R̃(e^{su}h₀, h₀), e^{su}h₀)`.
pub fn linear_sweep(
    base: &MetricPair,
    mu: &Form,
    xi: &Form,
    u: &Reduction,
    grid: &[f64],
) -> Result<Vec<SweepRow>> {
    let path = ParamPath::linear(base.clone(), mu.clone(), xi.clone(), u.clone());
    grid.iter()
        .map(|&s| {
            let p = path.sample(s)?;
            Ok(SweepRow {
                t: s,
                m: p.value,
                dm: p.first_variation(),
                d2m: p.second_variation(),
                residual: p.concave_residual(),
            })
        })
        .collect()
}

/// Summary of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    /// Largest discrete second difference.
    pub max_second_difference: f64,
    pub strictly_increasing: bool,
    pub argmax: usize,
}

pub fn summarize_sweep(rows: &[SweepRow]) -> SweepSummary {
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ms: Vec<f64> = rows.iter().map(|r| r.m).collect();
    let max_second_difference = if ts.len() >= 3 && uniform(&ts) {
        discrete_second_difference(&ts, &ms)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        // non-uniform grid: divided differences
        ms.windows(3)
            .zip(ts.windows(3))
            .map(|(m, t)| {
                let s1 = (m[1] - m[0]) / (t[1] - t[0]);
                let s2 = (m[2] - m[1]) / (t[2] - t[1]);
                2.0 * (s2 - s1) / (t[2] - t[0])
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let strictly_increasing = ms.windows(2).all(|w| w[1] > w[0]);
    let argmax = ms
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc })
        .0;
    SweepSummary {
        max_second_difference,
        strictly_increasing,
        argmax,
    }
}

fn uniform(ts: &[f64]) -> bool {
    let dt = ts[1] - ts[0];
    ts.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12 * dt.abs().max(1.0))
}

/// `∫ a ∧ b` as a real number.
fn pair_integral(h: &HermitianStructure, a: &Form, b: &Form) -> Result<f64> {
    Ok(h.model().integrate_top(&a.wedge(b)?)?.re)
}

/// The appendix functional
/// `∫ γ e^{(λ−2)f} ωⁿ − (τ₀ + R̃(h, h₀)) ∧ ω^{n−1}` with `h = e^u h₀`.
pub fn appendix_functional(
    h: &HermitianStructure,
    base: &Bundle,
    path: &Reduction,
    tau0: &Form,
) -> Result<f64> {
    let n = h.n();
    let (lambda, gamma) = appendix_constants(n)?;
    let wn1 = h.omega().pow(n - 1)?;
    let bal = h.model().d(&wn1)?.norm_max();
    if bal > 1e-8 * wn1.norm_max().max(1.0) {
        return Err(Error::Precondition(format!("omega is not balanced ({:.3e})", bal)));
    }
    let f = h.dilaton_function()?;
    let model = h.model();
    let dil = gamma * ((lambda - 2.0) * f).exp() * model.integrate_top(&h.omega().pow(n)?)?.re;
    let mut tau = tau0.clone();
    if path.u.iter().any(|z| z.norm() != 0.0) {
        tau += &donaldson_r(&base.algebra, h.complex_structure(), &base.theta, path)?;
    }
    Ok(dil - pair_integral(h, &tau, &wn1)?)
}

/// The Donaldson part `−∫ R̃(h, h₀) ∧ ω^{n−1}`.
pub fn donaldson_functional(h: &HermitianStructure, base: &Bundle, path: &Reduction) -> Result<f64> {
    let wn1 = h.omega().pow(h.n() - 1)?;
    let r = donaldson_r(&base.algebra, h.complex_structure(), &base.theta, path)?;
    Ok(-pair_integral(h, &r, &wn1)?)
}

/// The positive `(1,1)`-form `ω` with `ω^{n−1} = Φ`, by Newton's method from `start`.
pub fn root_of_power(h: &HermitianStructure, phi: &Form, start: &Form) -> Result<Form> {
    let n = h.n();
    let m = h.dim();
    let basis = real_11_basis(h.complex_structure());
    let mut w = start.clone();
    for _ in 0..50 {
        let r = &w.pow(n - 1)? - phi;
        if r.norm_max() <= 1e-15 * phi.norm_max().max(1.0) {
            return Ok(w);
        }
        let jac = crate::lie_exterior::wedge_matrix(&w.pow(n - 2)?.scale_re((n - 1) as f64), 2)?
            * basis.map(|x| C64::new(x, 0.0));
        let step = lstsq(&jac, &r.to_vec());
        let dw = Form::from_vec(m, 2, &(basis.map(|x| C64::new(x, 0.0)) * step)).re();
        w -= &dw;
        if dw.norm_max() <= 1e-16 * w.norm_max() {
            return Ok(w);
        }
    }
    let r = (&w.pow(n - 1)? - phi).norm_max();
    if r > 1e-10 * phi.norm_max().max(1.0) {
        return Err(Error::Inconsistent(r));
    }
    Ok(w)
}

/// Solves `k ω̇ ∧ ω^{n−2} = rhs` for a real `(1,1)`-form `ω̇`.
fn solve_lefschetz(h: &HermitianStructure, rhs: &Form, k: f64) -> Result<Form> {
    let n = h.n();
    let basis = real_11_basis(h.complex_structure()).map(|x| C64::new(x, 0.0));
    let a = crate::lie_exterior::wedge_matrix(&h.omega().pow(n - 2)?.scale_re(k), 2)? * &basis;
    let c = lstsq(&a, &rhs.to_vec());
    let res = (&a * &c - rhs.to_vec()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if res > 1e-10 * rhs.norm_max().max(1.0) {
        return Err(Error::Inconsistent(res));
    }
    Ok(Form::from_vec(h.dim(), 2, &(&basis * c)).re())
}

/// A path through balanced metrics, `ω_t^{n−1} = ω^{n−1} + dd^c(tφ₁ + t²φ₂/2)`,
/// with `h_t = e^{tu} h₀`.
#[derive(Clone, Debug)]
pub struct AppendixPath {
    pub h: HermitianStructure,
    pub base: Bundle,
    pub tau0: Form,
    pub phi1: Form,
    pub phi2: Form,
    pub u: Reduction,
}

/// Analytic derivatives of the appendix functional split by source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixDerivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
    /// `d²/dt²` of the dilaton part.
    pub second_dilaton: f64,
    /// `d²/dt²` of `−∫(τ₀ + R̃) ∧ ω^{n−1}`.
    pub second_donaldson: f64,
}

impl AppendixPath {
    fn ddc(&self, phi: &Form) -> Form {
        if phi.norm_max() == 0.0 {
            return Form::zero(self.h.dim(), 2 * self.h.n() - 2);
        }
        self.h.complex_structure().ddc(phi).re()
    }

    pub fn h_at(&self, t: f64) -> Result<HermitianStructure> {
        let n = self.h.n();
        let phi = &self.phi1.scale_re(t) + &self.phi2.scale_re(0.5 * t * t);
        let target = &self.h.omega().pow(n - 1)? + &self.ddc(&phi);
        let w = root_of_power(&self.h, &target, self.h.omega())?;
        self.h.with_omega(w)
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        appendix_functional(&self.h_at(t)?, &self.base, &self.u.scaled(t), &self.tau0)
    }

    /// Derivatives at `t = 0`, derived from `ω̇`, `ω̈` and the first two
    /// derivatives of `R̃`.
    pub fn derivatives(&self) -> Result<AppendixDerivatives> {
        let h = &self.h;
        let n = h.n();
        let nf = n as f64;
        let (lambda, gamma) = appendix_constants(n)?;
        let model = h.model();
        let phi_dot = self.ddc(&self.phi1);
        let phi_ddot = self.ddc(&self.phi2);
        let w = h.omega();
        let wd = solve_lefschetz(h, &phi_dot, nf - 1.0)?;
        let quad = if n >= 3 {
            wd.w(&wd).w(&w.pow(n - 3)?).scale_re((nf - 1.0) * (nf - 2.0))
        } else {
            Form::zero(h.dim(), 2 * n - 2)
        };
        let wdd = solve_lefschetz(h, &(&phi_ddot - &quad), nf - 1.0)?;
        let f = h.dilaton_function()?;
        let fd = 0.5 * h.trace(&wd).re;
        let fdd = 0.5 * (h.trace(&wdd).re - h.norm2(&wd));
        let vmu = model.integrate_top(h.mu())?.re;
        let k = gamma * factorial(n) * vmu * (lambda * f).exp();
        let dil0 = k;
        let dil1 = k * lambda * fd;
        let dil2 = k * (lambda * fdd + lambda * lambda * fd * fd);

        let alg = &self.base.algebra;
        let theta = &self.base.theta;
        let u = &self.u.u;
        let fcurv = curvature(alg, model, theta)?;
        let rd = ic(alg, u, &fcurv);
        let fdot = covariant_d(alg, h, theta, &del_h(alg, h.complex_structure(), theta, u))?;
        let rdd = ic(alg, u, &fdot);
        let wn1 = w.pow(n - 1)?;
        let t0 = &self.tau0;
        let don0 = -pair_integral(h, t0, &wn1)?;
        let don1 = -(pair_integral(h, &rd, &wn1)? + pair_integral(h, t0, &phi_dot)?);
        let don2 = -(pair_integral(h, &rdd, &wn1)?
            + 2.0 * pair_integral(h, &rd, &phi_dot)?
            + pair_integral(h, t0, &phi_ddot)?);
        Ok(AppendixDerivatives {
            value: dil0 + don0,
            first: dil1 + don1,
            second: dil2 + don2,
            second_dilaton: dil2,
            second_donaldson: don2,
        })
    }

    /// The bundle terms of the hessian in the `|d^h u|²_c` form:
    /// `−2i∫c(u, F) ∧ dd^cφ̇ + (1/2n) ∫ |d^h u|²_c ωⁿ`.
    pub fn bundle_hessian_norm_form(&self) -> Result<f64> {
        let h = &self.h;
        let n = h.n();
        let model = h.model();
        let alg = &self.base.algebra;
        let theta = &self.base.theta;
        let u = &self.u.u;
        let fcurv = curvature(alg, model, theta)?;
        let phi_dot = self.ddc(&self.phi1);
        let cross = -2.0 * pair_integral(h, &ic(alg, u, &fcurv), &phi_dot)?;
        let du = alg.bracket_const(theta, u);
        let wn = model.integrate_top(&h.omega().pow(n)?)?.re;
        Ok(cross + c_norm2(alg, h, &du) * wn / (2.0 * n as f64))
    }
}

/// `|A|²_c = Σ g^{ij} c(A_i, A_j^*)` for an `ad`-valued 1-form in the
/// compact basis, with `*` the conjugation fixing the compact form.
pub fn c_norm2(alg: &GaugeAlgebra, h: &HermitianStructure, a: &VForm) -> f64 {
    let gram = h.gram(1);
    let r = alg.rank();
    let m = h.dim();
    let p = alg.pairing();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let gij = gram[(i, j)];
            if gij.norm() == 0.0 {
                continue;
            }
            for a1 in 0..r {
                for b1 in 0..r {
                    let x = a.comp(a1).coeffs()[i];
                    let y = a.comp(b1).coeffs()[j];
                    acc += gij * p[(a1, b1)] * x * y.conj();
                }
            }
        }
    }
    acc.re
}

/// Reports the coefficient vector of a real `(1,1)`-form in the real basis.
pub fn real_11_coordinates(h: &HermitianStructure, a: &Form) -> CVec {
    let basis = real_11_basis(h.complex_structure()).map(|x| C64::new(x, 0.0));
    lstsq(&basis, &a.to_vec())
}
