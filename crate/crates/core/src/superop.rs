//! Superoperators on `d × d` operators in column-stacking vectorisation:
//! `vec(X)[i + d j] = X[i, j]`.

use faer::Mat;

use crate::linalg::{self, CMat, ONE, ZERO};
use crate::{c64, Error, Result};

#[derive(Debug, Clone)]
pub struct SuperOperator {
    pub matrix: CMat,
    pub dim: usize,
    pub tau: f64,
}

pub fn vectorize(x: &CMat) -> Vec<c64> {
    let d = x.nrows();
    let mut v = Vec::with_capacity(d * x.ncols());
    for j in 0..x.ncols() {
        for i in 0..d {
            v.push(x[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[c64], d: usize) -> CMat {
    Mat::from_fn(d, d, |i, j| v[i + d * j])
}

impl SuperOperator {
    pub fn new(matrix: CMat, tau: f64) -> Result<Self> {
        let n = matrix.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if n != matrix.ncols() || d * d != n {
            return Err(Error::DimensionMismatch(format!("superoperator of shape {}x{}", n, matrix.ncols())));
        }
        Ok(Self { matrix, dim: d, tau })
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: linalg::identity(d * d), dim: d, tau: 0.0 }
    }

    pub fn zero(d: usize) -> Self {
        Self { matrix: Mat::zeros(d * d, d * d), dim: d, tau: 0.0 }
    }

    /// Superoperator of a linear map given by its action on operators.
    pub fn from_map(d: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let n = d * d;
        let mut m = Mat::zeros(n, n);
        for col in 0..n {
            let mut e = Mat::<c64>::zeros(d, d);
            e[(col % d, col / d)] = ONE;
            let image = vectorize(&f(&e));
            for (row, v) in image.into_iter().enumerate() {
                m[(row, col)] = v;
            }
        }
        Self { matrix: m, dim: d, tau: 0.0 }
    }

    /// `X ↦ −i[H, X]`.
    pub fn commutator(h: &CMat) -> Self {
        let d = h.nrows();
        Self::from_map(d, |x| {
            let c = &(h * x) - &(x * h);
            linalg::scale(&c, c64::new(0.0, -1.0))
        })
    }

    /// `X ↦ U X U†`.
    pub fn conjugation(u: &CMat) -> Self {
        let d = u.nrows();
        Self::from_map(d, |x| &(u * x) * u.adjoint())
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let v = vectorize(x);
        let n = v.len();
        let out: Vec<c64> = (0..n)
            .map(|r| (0..n).map(|c| self.matrix[(r, c)] * v[c]).sum())
            .collect();
        unvectorize(&out, self.dim)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SuperOperator) -> SuperOperator {
        SuperOperator { matrix: &self.matrix * &other.matrix, dim: self.dim, tau: self.tau }
    }

    pub fn inverse(&self) -> Result<SuperOperator> {
        let cond = self.condition_number();
        if !(cond < 1e12) {
            return Err(Error::SingularMap { tau: self.tau, condition: cond });
        }
        Ok(SuperOperator { matrix: linalg::inverse(&self.matrix), dim: self.dim, tau: self.tau })
    }

    pub fn condition_number(&self) -> f64 {
        linalg::condition_number(&self.matrix)
    }

    /// `Σ_ij Λ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, positive semidefinite iff the map is completely positive.
    pub fn choi_matrix(&self) -> CMat {
        let d = self.dim;
        Mat::from_fn(d * d, d * d, |r, c| {
            let (a, i) = (r / d, r % d);
            let (b, j) = (c / d, c % d);
            self.matrix[(a + d * b, i + d * j)]
        })
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.choi_matrix())
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_j |Σ_i Λ[ii, j] − vec(1)_j|`: zero for trace-preserving maps.
    pub fn trace_preservation_residual(&self) -> f64 {
        self.trace_row_deviation(true)
    }

    /// `max_j |Σ_i L[ii, j]|`: zero for trace-annihilating generators.
    pub fn trace_annihilation_residual(&self) -> f64 {
        self.trace_row_deviation(false)
    }

    fn trace_row_deviation(&self, preserve: bool) -> f64 {
        let d = self.dim;
        let n = d * d;
        (0..n)
            .map(|col| {
                let s: c64 = (0..d).map(|i| self.matrix[(i + d * i, col)]).sum();
                let target = if preserve && col % d == col / d { ONE } else { ZERO };
                (s - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from another superoperator.
    pub fn distance(&self, other: &SuperOperator) -> f64 {
        linalg::max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn eigenvalues(&self) -> Vec<c64> {
        linalg::eigen(&self.matrix).0
    }

    pub fn scaled(&self, s: f64) -> SuperOperator {
        SuperOperator { matrix: linalg::scale(&self.matrix, c64::new(s, 0.0)), dim: self.dim, tau: self.tau }
    }

    pub fn add(&self, other: &SuperOperator) -> SuperOperator {
        SuperOperator { matrix: &self.matrix + &other.matrix, dim: self.dim, tau: self.tau }
    }

    pub fn sub(&self, other: &SuperOperator) -> SuperOperator {
        SuperOperator { matrix: &self.matrix - &other.matrix, dim: self.dim, tau: self.tau }
    }

    /// `e^{τ L}` through the eigendecomposition, or a scaled Taylor series when
    /// `L` is defective.
    pub fn exp(&self, tau: f64) -> SuperOperator {
        let n = self.matrix.nrows();
        let (vals, vecs) = linalg::eigen(&self.matrix);
        if linalg::condition_number(&vecs) < 1e8 {
            let inv = linalg::inverse(&vecs);
            let scaled = Mat::from_fn(n, n, |i, k| vecs[(i, k)] * (vals[k] * tau).exp());
            return SuperOperator { matrix: &scaled * &inv, dim: self.dim, tau };
        }
        let a = linalg::scale(&self.matrix, c64::new(tau, 0.0));
        let norm = linalg::max_abs(&a) * n as f64;
        let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
        let a = linalg::scale(&a, c64::new(0.5f64.powi(squarings), 0.0));
        let mut term = linalg::identity(n);
        let mut sum = linalg::identity(n);
        for k in 1..30 {
            term = linalg::scale(&(&term * &a), c64::new(1.0 / k as f64, 0.0));
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        SuperOperator { matrix: sum, dim: self.dim, tau }
    }
}
