//! Density operators on the Fock space of a few modes.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::fock;
use crate::linalg::{self, CMat};
use crate::{c64, Error, Result};

#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub matrix: CMat,
    pub modes: usize,
}

impl DensityOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || !d.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "density operator of shape {}x{}",
                d,
                matrix.ncols()
            )));
        }
        Ok(Self { modes: d.trailing_zeros() as usize, matrix })
    }

    /// Diagonal state with the given Fock-basis probabilities.
    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let v: Vec<c64> = probabilities.iter().map(|&p| c64::new(p, 0.0)).collect();
        Self::new(linalg::diag(&v))
    }

    /// Product of independent modes with occupations `n_j`.
    pub fn product(occupations: &[f64]) -> Result<Self> {
        let k = occupations.len();
        let probs: Vec<f64> = (0..fock::dim(k))
            .map(|s| {
                (0..k)
                    .map(|j| {
                        if fock::occupation(s, k, j) {
                            occupations[j]
                        } else {
                            1.0 - occupations[j]
                        }
                    })
                    .product()
            })
            .collect();
        Self::diagonal(&probs)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(&self.matrix)
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t.norm() < 1e-300 {
            return Err(Error::ZeroTrace);
        }
        Ok(Self { matrix: linalg::scale(&self.matrix, t.inv()), modes: self.modes })
    }

    pub fn hermitian_part(&self) -> Self {
        Self { matrix: linalg::hermitian_part(&self.matrix), modes: self.modes }
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// `⟨n_j⟩` for each mode.
    pub fn occupations(&self) -> Vec<f64> {
        let p = self.populations();
        (0..self.modes)
            .map(|j| {
                p.iter()
                    .enumerate()
                    .filter(|(s, _)| fock::occupation(*s, self.modes, j))
                    .map(|(_, v)| v)
                    .sum()
            })
            .collect()
    }

    /// Single-particle correlations `C_ij = Tr(ρ c_j† c_i)`.
    pub fn correlations(&self) -> CMat {
        let k = self.modes;
        let ops: Vec<CMat> = (0..k).map(|j| fock::annihilation(k, j)).collect();
        Mat::from_fn(k, k, |i, j| {
            let op = ops[j].adjoint() * &ops[i];
            linalg::trace(&(&self.matrix * &op))
        })
    }

    pub fn expectation(&self, op: &CMat) -> c64 {
        linalg::trace(&(&self.matrix * op))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Unit trace, Hermitian and positive up to `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let herm = linalg::max_abs(&(&self.matrix - &linalg::hermitian_part(&self.matrix)));
        (self.trace() - 1.0).norm() < tol && herm < tol && self.min_eigenvalue() > -tol
    }

    pub fn summary(&self) -> StateSummary {
        StateSummary {
            populations: self.populations(),
            occupations: self.occupations(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSummary {
    pub populations: Vec<f64>,
    pub occupations: Vec<f64>,
    pub min_eigenvalue: f64,
}

/// `½ ‖ρ₁ − ρ₂‖₁`.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> f64 {
    0.5 * linalg::trace_norm(&(&a.matrix - &b.matrix))
}
