//! Small dense linear-algebra helpers on top of `faer`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, Side};

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn to_complex(a: &RMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn hermitian_part(a: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(a);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigendecomposition failed");
    let n = h.nrows();
    let vals = (0..n).map(|k| evd.S()[k].re).collect();
    (vals, evd.U().to_owned())
}

pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    hermitian_eigen(a).0
}

pub fn real_symmetric_eigen(a: &RMat) -> (Vec<f64>, RMat) {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition failed");
    let n = a.nrows();
    ((0..n).map(|k| evd.S()[k]).collect(), evd.U().to_owned())
}

/// Singular values. The iterative SVD occasionally fails to converge on
/// matrices mixing O(1) and ~1e-25 entries; the adjoint is tried next, then
/// the square roots of the eigenvalues of `a†a`.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if let Ok(sv) = a.singular_values() {
        return sv;
    }
    if let Ok(sv) = a.adjoint().to_owned().singular_values() {
        return sv;
    }
    let gram = a.adjoint() * a;
    let mut sv: Vec<f64> = hermitian_eigenvalues(&hermitian_part(&gram)).iter().map(|v| v.max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).iter().sum()
}

/// Ratio of the largest to the smallest singular value.
pub fn condition_number(a: &CMat) -> f64 {
    let sv = singular_values(a);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

/// General eigendecomposition `a = R diag(λ) R⁻¹`.
pub fn eigen(a: &CMat) -> (Vec<c64>, CMat) {
    let evd = a.eigen().expect("eigendecomposition failed");
    let n = a.nrows();
    ((0..n).map(|k| evd.S()[k]).collect(), evd.U().to_owned())
}

/// Exponential of `scale * a` for Hermitian `a`.
pub fn hermitian_exp(a: &CMat, scale: c64) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let n = vals.len();
    let d: Vec<c64> = vals.iter().map(|&v| (scale * v).exp()).collect();
    let left = Mat::from_fn(n, n, |i, k| vecs[(i, k)] * d[k]);
    &left * vecs.adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn diag(values: &[c64]) -> CMat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_norm_of_hermitian_is_sum_of_abs_eigenvalues() {
        let a = diag(&[c64::new(0.5, 0.0), c64::new(-0.25, 0.0)]);
        assert!((trace_norm(&a) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn hermitian_exp_of_diagonal() {
        let a = diag(&[c64::new(1.0, 0.0), c64::new(-2.0, 0.0)]);
        let e = hermitian_exp(&a, -I);
        assert!((e[(0, 0)] - c64::new(0.0, -1.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c64::new(0.0, 2.0).exp()).norm() < 1e-14);
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let a = diag(&[ONE, c64::new(2.0, 0.0)]);
        let b = Mat::from_fn(2, 2, |i, j| c64::new((i + 2 * j) as f64, 0.0));
        let k = kron(&a, &b);
        assert_eq!(k.nrows(), 4);
        assert_eq!(k[(3, 3)], c64::new(6.0, 0.0));
        assert_eq!(k[(0, 2)], ZERO);
    }
}
