//! Dense linear-algebra helpers shared by the qudit QEC crates.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`
//! (or `f64`). Hermitian eigendecompositions follow one deterministic
//! phase convention so that downstream code words and error bases are
//! reproducible bit-for-bit.

pub mod dd;

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Promote a real matrix to a complex one.
pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Frobenius norm.
pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Induced infinity norm (max absolute row sum); an upper bound on the
/// spectral norm, used for step-size control.
pub fn inf_norm(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖A − A†‖_F`.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    frob(&(m - m.adjoint()))
}

/// `‖A†A − I‖_F`.
pub fn unitarity_residual(m: &CMat) -> f64 {
    let n = m.ncols();
    frob(&(m.adjoint() * m - CMat::identity(n, n)))
}

/// Commutator `[A, B]`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

/// Make the first non-negligible component of `v` real and positive.
///
/// "Non-negligible" means larger than `1e-10` times the largest component,
/// so that round-off dust in a nominally zero entry does not decide the
/// phase.
pub fn fix_phase(v: &mut CVec) {
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-10 * big).copied() {
        let ph = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Columns of the returned matrix are orthonormal eigenvectors, each with
/// its first non-negligible component made real positive. The input is
/// symmetrised first to remove round-off anti-Hermitian parts.
pub fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = CMat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        let mut v: CVec = eig.eigenvectors.column(k).into_owned();
        fix_phase(&mut v);
        vecs.set_column(col, &v);
        vals.push(eig.eigenvalues[k]);
    }
    (vals, vecs)
}

/// `exp(−i·s·H)` for Hermitian `H` via its eigendecomposition.
pub fn expm_herm(h: &CMat, s: f64) -> CMat {
    let (w, v) = eigh(h);
    let phases = CVec::from_iterator(w.len(), w.iter().map(|&e| Complex64::from_polar(1.0, -s * e)));
    let scaled = CMat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * phases[j]);
    scaled * v.adjoint()
}

/// Ordinary least-squares line fit `y = slope·x + intercept`.
///
/// Returns `(slope, intercept, r²)`. `r²` is clamped to `[0, 1]`; a perfect
/// fit to constant data is reported as `r² = 1`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}
