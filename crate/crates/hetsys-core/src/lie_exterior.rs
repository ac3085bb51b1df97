//! Exterior algebra over the dual of a real Lie algebra.
//!
//! Multi-indices are bitmasks over the 0-based covector basis; a form of
//! degree k stores one coefficient per k-subset in lexicographic order of the
//! increasing index tuple.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::linalg::{binomial, max_abs, CMat, CVec, C64, ZERO};

pub type Mask = u32;

pub fn mask_of(indices: &[usize]) -> Mask {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn indices_of(mask: Mask) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

/// All k-subsets of `0..dim` as masks, lexicographic in the increasing tuple.
pub fn basis_masks(dim: usize, k: usize) -> Vec<Mask> {
    let mut out = Vec::with_capacity(binomial(dim, k));
    let mut idx: Vec<usize> = (0..k).collect();
    if k > dim {
        return out;
    }
    loop {
        out.push(mask_of(&idx));
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < dim - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Position of `mask` in [`basis_masks`].
pub fn rank_of(dim: usize, mask: Mask) -> usize {
    let k = mask.count_ones() as usize;
    let mut rank = 0;
    let mut prev: isize = -1;
    let mut i = 0;
    for a in 0..dim {
        if mask & (1 << a) == 0 {
            continue;
        }
        for j in (prev + 1) as usize..a {
            rank += binomial(dim - 1 - j, k - 1 - i);
        }
        prev = a as isize;
        i += 1;
    }
    rank
}

/// Sign of `e^A ∧ e^B` relative to `e^{A∪B}` (zero if they overlap).
pub fn wedge_sign(a: Mask, b: Mask) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += (a >> (j + 1)).count_ones();
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign of the permutation sorting `indices`, or zero on a repeat.
pub fn sort_sign(indices: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..indices.len() {
        for j in i + 1..indices.len() {
            if indices[i] == indices[j] {
                return 0;
            }
            if indices[i] > indices[j] {
                sign = -sign;
            }
        }
    }
    sign
}

#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: Vec<C64>,
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Form {
            dim,
            degree,
            coeffs: vec![ZERO; binomial(dim, degree)],
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        Form {
            dim,
            degree: 0,
            coeffs: vec![c],
        }
    }

    /// `e^{i_1} ∧ … ∧ e^{i_k}` for arbitrary (unsorted) 0-based indices.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        if indices.len() > dim {
            return Err(Error::DegreeOverflow {
                degree: indices.len(),
                dim,
            });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::Dimension(format!("index {} out of range 0..{}", bad, dim)));
        }
        let mut f = Form::zero(dim, indices.len());
        let s = sort_sign(indices);
        if s != 0 {
            f.coeffs[rank_of(dim, mask_of(indices))] = C64::new(s as f64, 0.0);
        }
        Ok(f)
    }

    /// The basis covector `e^i`.
    pub fn e(dim: usize, i: usize) -> Self {
        let mut f = Form::zero(dim, 1);
        f.coeffs[i] = C64::new(1.0, 0.0);
        f
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        if degree > dim {
            return Err(Error::DegreeOverflow { degree, dim });
        }
        if coeffs.len() != binomial(dim, degree) {
            return Err(Error::Dimension(format!(
                "{} coefficients for a degree-{} form in dimension {}",
                coeffs.len(),
                degree,
                dim
            )));
        }
        Ok(Form { dim, degree, coeffs })
    }

    pub fn from_vec(dim: usize, degree: usize, v: &CVec) -> Self {
        debug_assert_eq!(v.len(), binomial(dim, degree));
        Form {
            dim,
            degree,
            coeffs: v.iter().copied().collect(),
        }
    }

    pub fn to_vec(&self) -> CVec {
        CVec::from_column_slice(&self.coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn masks(&self) -> Vec<Mask> {
        basis_masks(self.dim, self.degree)
    }

    /// Coefficient of `e^{i_1…i_k}` (indices in any order, sign applied).
    pub fn coeff(&self, indices: &[usize]) -> C64 {
        if indices.len() != self.degree {
            return ZERO;
        }
        let s = sort_sign(indices);
        if s == 0 {
            return ZERO;
        }
        self.coeffs[rank_of(self.dim, mask_of(indices))] * s as f64
    }

    pub fn coeff_mask(&self, mask: Mask) -> C64 {
        self.coeffs[rank_of(self.dim, mask)]
    }

    pub fn add_term(&mut self, indices: &[usize], c: C64) {
        let s = sort_sign(indices);
        if s != 0 {
            self.coeffs[rank_of(self.dim, mask_of(indices))] += c * s as f64;
        }
    }

    /// Nonzero terms as (sorted 0-based indices, coefficient).
    pub fn terms(&self) -> Vec<(Vec<usize>, C64)> {
        self.masks()
            .into_iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(m, &c)| (indices_of(m), c))
            .collect()
    }

    pub fn scale(&self, c: C64) -> Form {
        Form {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Form {
        self.scale(C64::new(c, 0.0))
    }

    pub fn conj(&self) -> Form {
        Form {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn re(&self) -> Form {
        Form {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|z| C64::new(z.re, 0.0)).collect(),
        }
    }

    pub fn norm_max(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn imag_max(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm_max() <= tol
    }

    pub fn try_add(&self, other: &Form) -> Result<Form> {
        if self.degree != other.degree || self.dim != other.dim {
            return Err(Error::Degree {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(Form {
            dim: self.dim,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Graded-commutative exterior product.
    pub fn wedge(&self, other: &Form) -> Result<Form> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "wedge of forms over dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(Error::DegreeOverflow {
                degree,
                dim: self.dim,
            });
        }
        let mut out = Form::zero(self.dim, degree);
        let ma = self.masks();
        let mb = other.masks();
        for (a, &ca) in ma.iter().zip(&self.coeffs) {
            if ca.norm() == 0.0 {
                continue;
            }
            for (b, &cb) in mb.iter().zip(&other.coeffs) {
                if cb.norm() == 0.0 {
                    continue;
                }
                let s = wedge_sign(*a, *b);
                if s != 0 {
                    out.coeffs[rank_of(self.dim, a | b)] += ca * cb * s as f64;
                }
            }
        }
        Ok(out)
    }

    /// Wedge product for degrees known to fit; panics otherwise.
    pub fn w(&self, other: &Form) -> Form {
        self.wedge(other).expect("wedge degree overflow")
    }

    /// `self^k`, with `self^0 = 1`.
    pub fn pow(&self, k: usize) -> Result<Form> {
        let mut acc = Form::constant(self.dim, C64::new(1.0, 0.0));
        for _ in 0..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// Interior product with the vector `Σ v_i e_i`.
    pub fn interior(&self, v: &[C64]) -> Result<Form> {
        if self.degree == 0 {
            return Err(Error::Degree {
                expected: 1,
                found: 0,
            });
        }
        let mut out = Form::zero(self.dim, self.degree - 1);
        for (m, &c) in self.masks().iter().zip(&self.coeffs) {
            if c.norm() == 0.0 {
                continue;
            }
            for (pos, i) in indices_of(*m).into_iter().enumerate() {
                let s = if pos % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[rank_of(self.dim, m & !(1 << i))] += c * v[i] * s;
            }
        }
        Ok(out)
    }

    /// Evaluation on vectors `e_{i_1},…,e_{i_k}` (alternating convention,
    /// `(α∧β)(X,Y) = α(X)β(Y) − α(Y)β(X)`).
    pub fn eval(&self, args: &[usize]) -> C64 {
        self.coeff(args)
    }
}

impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        self.try_add(rhs).expect("adding forms of different degree")
    }
}

impl Add for Form {
    type Output = Form;
    fn add(self, rhs: Form) -> Form {
        &self + &rhs
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self + &(-rhs)
    }
}

impl Sub for Form {
    type Output = Form;
    fn sub(self, rhs: Form) -> Form {
        &self - &rhs
    }
}

impl AddAssign<&Form> for Form {
    fn add_assign(&mut self, rhs: &Form) {
        assert_eq!(self.degree, rhs.degree, "adding forms of different degree");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&Form> for Form {
    fn sub_assign(&mut self, rhs: &Form) {
        assert_eq!(self.degree, rhs.degree, "subtracting forms of different degree");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale_re(-1.0)
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale_re(-1.0)
    }
}

impl Mul<&Form> for C64 {
    type Output = Form;
    fn mul(self, rhs: &Form) -> Form {
        rhs.scale(self)
    }
}

impl Mul<&Form> for f64 {
    type Output = Form;
    fn mul(self, rhs: &Form) -> Form {
        rhs.scale_re(self)
    }
}

fn fmt_coeff(c: C64, tol: f64) -> String {
    let c = C64::new(
        if c.re.abs() <= tol { 0.0 } else { c.re },
        if c.im.abs() <= tol { 0.0 } else { c.im },
    );
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // roundoff-level terms are hidden
        let tol = 1e-13 * self.norm_max();
        let terms: Vec<_> = self.terms().into_iter().filter(|(_, c)| c.norm() > tol).collect();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let label: Vec<String> = idx.iter().map(|i| format!("{}", i + 1)).collect();
            let sep = if self.dim > 9 { "," } else { "" };
            if idx.is_empty() {
                write!(f, "{}", fmt_coeff(*c, tol))?;
            } else {
                write!(f, "{} e^{{{}}}", fmt_coeff(*c, tol), label.join(sep))?;
            }
        }
        Ok(())
    }
}

/// Matrix of `β ↦ a ∧ β` from degree `k` to degree `k + deg a`.
pub fn wedge_matrix(a: &Form, k: usize) -> Result<CMat> {
    let dim = a.dim();
    let out_deg = k + a.degree();
    if out_deg > dim {
        return Err(Error::DegreeOverflow {
            degree: out_deg,
            dim,
        });
    }
    let cols = basis_masks(dim, k);
    let mut m = CMat::zeros(binomial(dim, out_deg), cols.len());
    for (am, &ca) in a.masks().iter().zip(a.coeffs()) {
        if ca.norm() == 0.0 {
            continue;
        }
        for (j, &b) in cols.iter().enumerate() {
            let s = wedge_sign(*am, b);
            if s != 0 {
                m[(rank_of(dim, am | b), j)] += ca * s as f64;
            }
        }
    }
    Ok(m)
}

/// Extension of a linear map on covectors (`column j` = image of `e^j`) to
/// degree `k` as a derivation of the exterior algebra.
pub fn derivation_matrix(a: &CMat, k: usize) -> CMat {
    let dim = a.nrows();
    let masks = basis_masks(dim, k);
    let mut m = CMat::zeros(masks.len(), masks.len());
    for (col, &mask) in masks.iter().enumerate() {
        let idx = indices_of(mask);
        for (pos, &i) in idx.iter().enumerate() {
            for r in 0..dim {
                let c = a[(r, i)];
                if c.norm() == 0.0 {
                    continue;
                }
                let mut replaced = idx.clone();
                replaced[pos] = r;
                let s = sort_sign(&replaced);
                if s != 0 {
                    m[(rank_of(dim, mask_of(&replaced)), col)] += c * s as f64;
                }
            }
        }
    }
    m
}

/// Extension of a linear map on covectors to degree `k` as an algebra
/// morphism (`Λ^k a`).
pub fn exterior_power_matrix(a: &CMat, k: usize) -> CMat {
    let dim = a.nrows();
    let masks = basis_masks(dim, k);
    let mut m = CMat::zeros(masks.len(), masks.len());
    for (col, &mask) in masks.iter().enumerate() {
        let mut img = Form::constant(dim, C64::new(1.0, 0.0));
        for i in indices_of(mask) {
            let v = Form::from_vec(dim, 1, &a.column(i).into_owned());
            img = img.w(&v);
        }
        m.set_column(col, &img.to_vec());
    }
    m
}

/// A real Lie algebra presented by its structure equations `de^k`.
#[derive(Clone, Debug)]
pub struct LieModel {
    dim: usize,
    de: Vec<Form>,
    orientation: Vec<usize>,
    orientation_sign: f64,
    volume: f64,
    dmat: Vec<CMat>,
}

impl LieModel {
    /// Builds and validates a model. `orientation` is a 0-based permutation.
    pub fn new(de: Vec<Form>, orientation: Vec<usize>, volume: f64) -> Result<Self> {
        let dim = de.len();
        if dim == 0 || dim > 16 {
            return Err(Error::InvalidModel(format!("unsupported dimension {}", dim)));
        }
        for (k, f) in de.iter().enumerate() {
            if f.dim() != dim || f.degree() != 2 {
                return Err(Error::InvalidModel(format!(
                    "de^{} must be a 2-form in dimension {}",
                    k + 1,
                    dim
                )));
            }
        }
        let mut seen = orientation.clone();
        seen.sort_unstable();
        if seen != (0..dim).collect::<Vec<_>>() {
            return Err(Error::InvalidModel(String::from(
                "orientation is not a permutation of the basis",
            )));
        }
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::InvalidModel(format!("volume must be positive, got {}", volume)));
        }
        let orientation_sign = sort_sign(&orientation) as f64;
        let mut model = LieModel {
            dim,
            de,
            orientation,
            orientation_sign,
            volume,
            dmat: Vec::new(),
        };
        model.dmat = (0..dim).map(|k| model.build_d(k)).collect();
        let scale = model.de.iter().fold(1.0f64, |m, f| m.max(f.norm_max()));
        for k in 0..dim {
            let dd = model.d(&model.de[k])?;
            if dd.norm_max() > 1e-12 * scale * scale {
                return Err(Error::InvalidModel(format!(
                    "d(de^{}) = {} is not zero (Jacobi identity fails)",
                    k + 1,
                    dd
                )));
            }
        }
        Ok(model)
    }

    /// Structure equations from terms `(k, i, j, c)` meaning `de^k += c e^i ∧ e^j`.
    pub fn from_terms(
        dim: usize,
        terms: &[(usize, usize, usize, f64)],
        orientation: Vec<usize>,
        volume: f64,
    ) -> Result<Self> {
        let mut de = vec![Form::zero(dim, 2); dim];
        for &(k, i, j, c) in terms {
            if k >= dim || i >= dim || j >= dim {
                return Err(Error::InvalidModel(format!(
                    "structure term ({}, {}, {}) out of range",
                    k, i, j
                )));
            }
            de[k].add_term(&[i, j], C64::new(c, 0.0));
        }
        LieModel::new(de, orientation, volume)
    }

    /// Abelian algebra of dimension `dim` with the standard orientation.
    pub fn abelian(dim: usize, volume: f64) -> Result<Self> {
        LieModel::new(vec![Form::zero(dim, 2); dim], (0..dim).collect(), volume)
    }

    fn build_d(&self, k: usize) -> CMat {
        let dim = self.dim;
        let cols = basis_masks(dim, k);
        let mut m = CMat::zeros(binomial(dim, k + 1), cols.len());
        for (col, &mask) in cols.iter().enumerate() {
            let idx = indices_of(mask);
            let mut acc = Form::zero(dim, k + 1);
            for (pos, &i) in idx.iter().enumerate() {
                let mut before = Form::constant(dim, C64::new(1.0, 0.0));
                for &a in &idx[..pos] {
                    before = before.w(&Form::e(dim, a));
                }
                let mut after = Form::constant(dim, C64::new(1.0, 0.0));
                for &a in &idx[pos + 1..] {
                    after = after.w(&Form::e(dim, a));
                }
                let term = before.w(&self.de[i]).w(&after);
                let s = if pos % 2 == 0 { 1.0 } else { -1.0 };
                acc += &term.scale_re(s);
            }
            m.set_column(col, &acc.to_vec());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn orientation(&self) -> &[usize] {
        &self.orientation
    }

    pub fn structure(&self) -> &[Form] {
        &self.de
    }

    pub fn e(&self, i: usize) -> Form {
        Form::e(self.dim, i)
    }

    pub fn basis(&self, indices: &[usize]) -> Form {
        Form::basis(self.dim, indices).expect("basis indices within range")
    }

    pub fn zero(&self, degree: usize) -> Form {
        Form::zero(self.dim, degree)
    }

    pub fn one(&self) -> Form {
        Form::constant(self.dim, C64::new(1.0, 0.0))
    }

    /// Matrix of `d` from degree `k` to `k + 1`.
    pub fn d_matrix(&self, k: usize) -> &CMat {
        &self.dmat[k]
    }

    /// Chevalley-Eilenberg differential.
    pub fn d(&self, a: &Form) -> Result<Form> {
        if a.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "form of dimension {} on a model of dimension {}",
                a.dim(),
                self.dim
            )));
        }
        if a.degree() >= self.dim {
            return Err(Error::DegreeOverflow {
                degree: a.degree() + 1,
                dim: self.dim,
            });
        }
        Ok(Form::from_vec(
            self.dim,
            a.degree() + 1,
            &(&self.dmat[a.degree()] * a.to_vec()),
        ))
    }

    /// `d`, panicking on top-degree input.
    pub fn dd(&self, a: &Form) -> Form {
        self.d(a).expect("d of a form below top degree")
    }

    /// The positive top form `e^{σ(1)…σ(m)}`.
    pub fn orientation_form(&self) -> Form {
        Form::basis(self.dim, &self.orientation).expect("valid orientation")
    }

    /// Coefficient of a top form relative to the orientation form.
    pub fn top_coefficient(&self, a: &Form) -> Result<C64> {
        if a.degree() != self.dim {
            return Err(Error::Degree {
                expected: self.dim,
                found: a.degree(),
            });
        }
        Ok(a.coeffs()[0] * self.orientation_sign)
    }

    /// Integral over the compact quotient: top coefficient times the volume.
    pub fn integrate_top(&self, a: &Form) -> Result<C64> {
        Ok(self.top_coefficient(a)? * self.volume)
    }

    /// Structure constants `C^k_{ij}` with `[e_i, e_j] = Σ_k C^k_{ij} e_k`;
    /// entry `[k][(i, j)]`. Follows `de(X, Y) = −e([X, Y])`.
    pub fn bracket_constants(&self) -> Vec<CMat> {
        (0..self.dim)
            .map(|k| {
                let mut c = CMat::zeros(self.dim, self.dim);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        c[(i, j)] = -self.de[k].eval(&[i, j]);
                    }
                }
                c
            })
            .collect()
    }

    /// Bracket of two vectors in the basis `e_i`.
    pub fn bracket(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|k| {
                let mut s = ZERO;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s -= self.de[k].eval(&[i, j]) * x[i] * y[j];
                    }
                }
                s
            })
            .collect()
    }

    /// `tr ad_X = 0` for all X.
    pub fn is_unimodular(&self) -> bool {
        let c = self.bracket_constants();
        (0..self.dim).all(|i| {
            let tr: C64 = (0..self.dim).map(|j| c[j][(i, j)]).sum();
            tr.norm() < 1e-12
        })
    }

    /// Largest entry of `d∘d` over all degrees.
    pub fn d_squared_defect(&self) -> f64 {
        (0..self.dim.saturating_sub(1))
            .map(|k| max_abs(&(&self.dmat[k + 1] * &self.dmat[k])))
            .fold(0.0, f64::max)
    }
}
