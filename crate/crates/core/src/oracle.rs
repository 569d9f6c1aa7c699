//! Exact many-body reference for small quadratic models. States are vectors
//! on the full `2^M` Fock space and evolve under `H = Σ h_ij c_i† c_j`; no
//! correlation-matrix machinery is involved.

use faer::Mat;

use crate::linalg::{self, CMat, RMat};
use crate::state::DensityOperator;
use crate::{c64, Error, Result};

pub const MAX_MODES: usize = 12;

fn bit(modes: usize, j: usize) -> usize {
    1 << (modes - 1 - j)
}

/// Sign `(−1)^{number of occupied modes before j}`.
fn jw_sign(state: usize, modes: usize, j: usize) -> f64 {
    let before = if j == 0 { 0 } else { (state >> (modes - j)).count_ones() };
    if before % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply `c_j†` to a basis state: `None` if already occupied.
fn create(state: usize, modes: usize, j: usize) -> Option<(usize, f64)> {
    let b = bit(modes, j);
    (state & b == 0).then(|| (state | b, jw_sign(state, modes, j)))
}

fn annihilate(state: usize, modes: usize, j: usize) -> Option<(usize, f64)> {
    let b = bit(modes, j);
    (state & b != 0).then(|| (state ^ b, jw_sign(state, modes, j)))
}

pub struct ManyBodyOracle {
    modes: usize,
    energies: Vec<f64>,
    vectors: CMat,
}

impl ManyBodyOracle {
    pub fn new(h: &RMat) -> Result<Self> {
        let modes = h.nrows();
        if modes > MAX_MODES {
            return Err(Error::ModeCountTooLarge { modes, limit: MAX_MODES });
        }
        let dim = 1usize << modes;
        let mut hm = Mat::<c64>::zeros(dim, dim);
        for n in 0..dim {
            for j in 0..modes {
                let Some((m, s1)) = annihilate(n, modes, j) else { continue };
                for i in 0..modes {
                    if h[(i, j)] == 0.0 {
                        continue;
                    }
                    if let Some((k, s2)) = create(m, modes, i) {
                        hm[(k, n)] += c64::new(h[(i, j)] * s1 * s2, 0.0);
                    }
                }
            }
        }
        let (energies, vectors) = linalg::hermitian_eigen(&hm);
        Ok(Self { modes, energies, vectors })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `Π_pairs (c_a† + c_b†)/√2 Π_occupied c_k† |0⟩`.
    pub fn initial_state(&self, occupied: &[usize], bell_pairs: &[(usize, usize)]) -> Vec<c64> {
        let dim = 1usize << self.modes;
        let mut psi = vec![c64::new(0.0, 0.0); dim];
        psi[0] = c64::new(1.0, 0.0);
        let apply = |psi: &[c64], terms: &[(usize, f64)]| {
            let mut out = vec![c64::new(0.0, 0.0); dim];
            for (n, &a) in psi.iter().enumerate() {
                if a.norm() == 0.0 {
                    continue;
                }
                for &(j, w) in terms {
                    if let Some((m, s)) = create(n, self.modes, j) {
                        out[m] += a * (s * w);
                    }
                }
            }
            out
        };
        for &k in occupied.iter().rev() {
            psi = apply(&psi, &[(k, 1.0)]);
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for &(a, b) in bell_pairs.iter().rev() {
            psi = apply(&psi, &[(a, r), (b, r)]);
        }
        psi
    }

    /// `e^{−iHτ} ψ`.
    pub fn evolve(&self, psi: &[c64], tau: f64) -> Vec<c64> {
        let dim = psi.len();
        let coeffs: Vec<c64> = (0..dim)
            .map(|k| {
                let overlap: c64 = (0..dim).map(|n| self.vectors[(n, k)].conj() * psi[n]).sum();
                overlap * c64::from_polar(1.0, -self.energies[k] * tau)
            })
            .collect();
        (0..dim).map(|n| (0..dim).map(|k| self.vectors[(n, k)] * coeffs[k]).sum()).collect()
    }

    /// Reduced state of a contiguous, increasing block of modes.
    pub fn reduced(&self, psi: &[c64], targets: &[usize]) -> Result<DensityOperator> {
        let k = targets.len();
        if k == 0 || targets.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidInput("oracle partial trace needs a contiguous block".into()));
        }
        let first = targets[0];
        let tail = self.modes - first - k;
        let dk = 1usize << k;
        let mut rho = Mat::<c64>::zeros(dk, dk);
        for (n, &a) in psi.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            let x = (n >> tail) & (dk - 1);
            let rest = n & !((dk - 1) << tail);
            for y in 0..dk {
                let m = rest | (y << tail);
                rho[(x, y)] += a * psi[m].conj();
            }
        }
        DensityOperator::new(rho)
    }
}
