//! Damping basis of the converged generator, the fast state and the
//! weak/strong/extreme classification.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::state::{trace_distance, DensityOperator};
use crate::superop::{unvectorize, vectorize, SuperOperator};
use crate::tomography::sort_by_decay;
use crate::{c64, Error, Result};

/// Default threshold below which a mode amplitude counts as zero.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-6;
/// Minimum eigenvalue below which a fast state is flagged non-physical.
pub const PHYSICAL_TOLERANCE: f64 = 1e-8;

/// Right (`F_μ`) and left (`G_μ`) eigenoperators of a generator with
/// `Tr(G_μ† F_ν) = δ_μν`, ordered by `|Re λ|` then `|Im λ|`.
#[derive(Debug, Clone)]
pub struct DampingBasis {
    pub eigenvalues: Vec<c64>,
    pub right: Vec<CMat>,
    pub left: Vec<CMat>,
}

pub fn damping_basis(l: &SuperOperator) -> Result<DampingBasis> {
    let (vals, r) = linalg::eigen(&l.matrix);
    let condition = linalg::condition_number(&r);
    if !(condition < 1e12) {
        return Err(Error::NonDiagonalizable { condition });
    }
    let rinv = linalg::inverse(&r);
    let n = vals.len();
    let d = l.dim;
    let mut order: Vec<usize> = (0..n).collect();
    let mut keyed: Vec<(c64, usize)> = vals.iter().cloned().zip(0..n).collect();
    {
        let mut v: Vec<c64> = keyed.iter().map(|k| k.0).collect();
        sort_by_decay(&mut v);
        // stable assignment of sorted values back to their original indices
        for (slot, val) in v.iter().enumerate() {
            let pos = keyed.iter().position(|(x, _)| x == val).unwrap();
            order[slot] = keyed.remove(pos).1;
        }
    }
    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for (slot, &k) in order.iter().enumerate() {
        let f: Vec<c64> = (0..n).map(|i| r[(i, k)]).collect();
        let g: Vec<c64> = (0..n).map(|i| rinv[(k, i)].conj()).collect();
        let mut f = unvectorize(&f, d);
        let mut g = unvectorize(&g, d);
        let c = if slot == 0 {
            linalg::trace(&f)
        } else {
            let v = vectorize(&f);
            let mut best = v[0];
            for z in &v {
                if z.norm() > best.norm() * (1.0 + 1e-9) {
                    best = *z;
                }
            }
            best
        };
        if c.norm() > 1e-300 {
            f = linalg::scale(&f, c.inv());
            g = linalg::scale(&g, c.conj());
        }
        eigenvalues.push(vals[k]);
        right.push(f);
        left.push(g);
    }
    Ok(DampingBasis { eigenvalues, right, left })
}

impl DampingBasis {
    /// `Tr(G_μ† X)` for every mode.
    pub fn amplitudes(&self, x: &CMat) -> Vec<c64> {
        self.left.iter().map(|g| linalg::trace(&(g.adjoint() * x))).collect()
    }

    /// Largest deviation of `Tr(G_μ† F_ν)` from `δ_μν`.
    pub fn biorthonormality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (m, g) in self.left.iter().enumerate() {
            for (n, f) in self.right.iter().enumerate() {
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((linalg::trace(&(g.adjoint() * f)) - target).norm());
            }
        }
        worst
    }

    /// `ρ(∞) + Σ_{μ≥2} e^{λ_μ t} α_μ F_μ`.
    pub fn evolve(&self, amplitudes: &[c64], t: f64) -> CMat {
        let mut x = self.right[0].clone();
        for (mu, a) in amplitudes.iter().enumerate().skip(1) {
            x += linalg::scale(&self.right[mu], *a * (self.eigenvalues[mu] * t).exp());
        }
        x
    }
}

/// `α_μ = Tr(G_μ† S[ρ₀])` for `μ ≥ 2` (index 0 of the result is `μ = 2`).
pub fn mode_amplitudes(basis: &DampingBasis, s: &SuperOperator, rho0: &DensityOperator) -> Vec<c64> {
    basis.amplitudes(&s.apply(&rho0.matrix)).into_iter().skip(1).collect()
}

#[derive(Debug, Clone)]
pub struct FastState {
    pub state: DensityOperator,
    pub physical: bool,
}

/// `ρ_f = S⁻¹[ρ_ss] / Tr S⁻¹[ρ_ss]`, Hermitised; non-physical results are kept.
pub fn fast_state(s: &SuperOperator, rho_ss: &DensityOperator) -> Result<FastState> {
    let inv = s.inverse()?;
    let x = inv.apply(&rho_ss.matrix);
    let tr = linalg::trace(&x);
    if tr.norm() < 1e-12 {
        return Err(Error::ZeroTrace);
    }
    let state = DensityOperator::new(linalg::hermitian_part(&linalg::scale(&x, tr.inv())))?;
    let physical = state.min_eigenvalue() >= -PHYSICAL_TOLERANCE;
    Ok(FastState { state, physical })
}

/// Occupation of the fast state of a single dot from the population block of
/// `S`: `p_f = (ν − (1 − p∞)) / (ν − σ)` with `ν = ⟨0|S[|0⟩⟨0|]|0⟩` and
/// `σ = ⟨0|S[|1⟩⟨1|]|0⟩`.
pub fn single_dot_fast_occupation(s: &SuperOperator, p_inf: f64) -> f64 {
    let nu = s.matrix[(0, 0)].re;
    let sigma = s.matrix[(0, 3)].re;
    (nu - (1.0 - p_inf)) / (nu - sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MpembaKind {
    None,
    Weak,
    Strong,
    Extreme,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpembaReport {
    pub kind: MpembaKind,
    pub mode_amplitudes_fast: Vec<(f64, f64)>,
    pub mode_amplitudes_ss: Vec<(f64, f64)>,
    /// Slowest excited mode (1-based, `μ ≥ 2`) of the fast and steady states.
    pub slowest_excited_fast: Option<usize>,
    pub slowest_excited_ss: Option<usize>,
    pub physical: bool,
    /// `T[ρ_f, ρ(∞)]`.
    pub delta: f64,
    pub eigenvalues: Vec<(f64, f64)>,
}

fn slowest_excited(amps: &[c64], tol: f64) -> Option<usize> {
    amps.iter().position(|a| a.norm() > tol).map(|k| k + 2)
}

/// Compare the slow-mode content of `S[ρ₀]` and `S[ρ_ss]`.
pub fn classify_state(
    basis: &DampingBasis,
    s: &SuperOperator,
    rho_ss: &DensityOperator,
    rho0: &DensityOperator,
    amplitude_tol: f64,
) -> (MpembaKind, Vec<c64>, Vec<c64>, Option<usize>, Option<usize>) {
    let scale = linalg::trace_norm(&rho_ss.matrix);
    let tol = amplitude_tol * scale;
    let a0 = mode_amplitudes(basis, s, rho0);
    let ass = mode_amplitudes(basis, s, rho_ss);
    let nu = slowest_excited(&a0, tol);
    let kappa = slowest_excited(&ass, tol);
    let rate = |mu: usize| basis.eigenvalues[mu - 1].re.abs();
    let kind = match (kappa, nu) {
        (None, _) => MpembaKind::None,
        (Some(_), None) => MpembaKind::Extreme,
        (Some(k), Some(n)) => {
            let (rk, rn) = (rate(k), rate(n));
            let same = (rn - rk).abs() <= 1e-8 * rk.max(rn).max(1e-300);
            if !same && rn > rk {
                MpembaKind::Strong
            } else if same && a0[n - 2].norm() < ass[k - 2].norm() {
                MpembaKind::Weak
            } else {
                MpembaKind::None
            }
        }
    };
    (kind, a0, ass, nu, kappa)
}

pub fn classify(
    basis: &DampingBasis,
    s: &SuperOperator,
    rho_ss: &DensityOperator,
    amplitude_tol: f64,
) -> Result<(MpembaReport, FastState)> {
    let fast = fast_state(s, rho_ss)?;
    let (kind, af, ass, nu, kappa) = classify_state(basis, s, rho_ss, &fast.state, amplitude_tol);
    let pair = |v: &[c64]| v.iter().map(|z| (z.re, z.im)).collect();
    let report = MpembaReport {
        kind,
        mode_amplitudes_fast: pair(&af),
        mode_amplitudes_ss: pair(&ass),
        slowest_excited_fast: nu,
        slowest_excited_ss: kappa,
        physical: fast.physical,
        delta: trace_distance(&fast.state, rho_ss),
        eigenvalues: pair(&basis.eigenvalues),
    };
    Ok((report, fast))
}
