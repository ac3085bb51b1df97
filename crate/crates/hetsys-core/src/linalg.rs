//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Relative singular-value threshold for rank decisions.
pub const RANK_REL_TOL: f64 = 1e-9;
/// Singular values below this are zero regardless of scale (roundoff floor).
pub const RANK_ABS_TOL: f64 = 1e-11;

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn to_complex(a: &RMat) -> CMat {
    a.map(re)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_vec(a: &CVec) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Singular values (descending) and a full set of right singular vectors.
pub fn svd_full(a: &CMat) -> (Vec<f64>, CMat) {
    let (r, c) = a.shape();
    if c == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let padded = if r < c {
        let mut p = CMat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = CMat::zeros(c, c);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..c {
            v[(k, col)] = v_t[(i, k)].conj();
        }
    }
    (sv, v)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

fn threshold(sv: &[f64]) -> f64 {
    let top = sv.first().copied().unwrap_or(0.0);
    (RANK_REL_TOL * top).max(RANK_ABS_TOL)
}

pub fn rank(a: &CMat) -> usize {
    let sv = singular_values(a);
    let tol = threshold(&sv);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis (columns) of the null space.
pub fn null_space(a: &CMat) -> CMat {
    let c = a.ncols();
    if c == 0 {
        return CMat::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return CMat::identity(c, c);
    }
    let (sv, v) = svd_full(a);
    let tol = threshold(&sv);
    let r = sv.iter().filter(|&&s| s > tol).count();
    v.columns(r, c - r).into_owned()
}

/// Orthonormal basis (columns) of the column space.
pub fn column_space(a: &CMat) -> CMat {
    let r = a.nrows();
    if a.ncols() == 0 || r == 0 {
        return CMat::zeros(r, 0);
    }
    // right singular vectors of a^H span the column space of a
    let (sv, v) = svd_full(&a.adjoint());
    let tol = threshold(&sv);
    let k = sv.iter().filter(|&&s| s > tol).count();
    v.columns(0, k).into_owned()
}

/// Minimal-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &CMat, b: &CVec) -> CVec {
    let c = a.ncols();
    if c == 0 {
        return CVec::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut sorted = sv.clone();
    sorted.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    let tol = threshold(&sorted);
    let mut x = CVec::zeros(c);
    for (k, &s) in sv.iter().enumerate() {
        if s <= tol {
            continue;
        }
        let coef = u.column(k).dotc(b) / s;
        for j in 0..c {
            x[j] += v_t[(k, j)].conj() * coef;
        }
    }
    x
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn inverse_hpd(g: &CMat) -> CMat {
    let n = g.nrows();
    match g.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => g.clone().try_inverse().unwrap_or_else(|| CMat::zeros(n, n)),
    }
}

/// Adjoint of `a: V → W` with respect to Gram matrices on `V` and `W`.
pub fn adjoint(a: &CMat, gram_dom: &CMat, gram_cod: &CMat) -> CMat {
    inverse_hpd(gram_dom) * a.adjoint() * gram_cod
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut s = 0u32;
    while norm / f64::powi(2.0, s as i32) > 0.25 {
        s += 1;
    }
    let scaled = a / re(f64::powi(2.0, s as i32));
    let mut term = CMat::identity(n, n);
    let mut acc = CMat::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / re(k as f64);
        acc += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    acc
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue_sym(a: &RMat) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &x| m.min(x))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Relative difference `|a-b| / max(|a|,|b|,floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Columns side by side.
pub fn hcat(rows: usize, blocks: &[CMat]) -> CMat {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), b.shape()).copy_from(b);
        c += b.ncols();
    }
    out
}

/// Rows stacked.
pub fn vcat(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), b.shape()).copy_from(b);
        r += b.nrows();
    }
    out
}
