//! Jordan-Wigner representation of a few fermionic modes.
//!
//! Basis index `n = Σ_j n_j 2^(k-1-j)`: mode 0 is the most significant bit,
//! so for two modes the basis order is |00⟩, |01⟩, |10⟩, |11⟩.

use faer::{c64, Mat};

use crate::linalg::{CMat, ONE, ZERO};

pub fn dim(modes: usize) -> usize {
    1 << modes
}

pub fn occupation(state: usize, modes: usize, j: usize) -> bool {
    state >> (modes - 1 - j) & 1 == 1
}

pub fn particle_number(state: usize) -> u32 {
    state.count_ones()
}

/// Annihilation operator `c_j` on `modes` modes.
pub fn annihilation(modes: usize, j: usize) -> CMat {
    assert!(j < modes);
    let d = dim(modes);
    let bit = 1usize << (modes - 1 - j);
    let mut c = Mat::zeros(d, d);
    for n in 0..d {
        if n & bit != 0 {
            // parity of the modes preceding j
            let preceding = (n >> (modes - j)).count_ones();
            let sign = if preceding % 2 == 0 { 1.0 } else { -1.0 };
            c[(n ^ bit, n)] = c64::new(sign, 0.0);
        }
    }
    c
}

pub fn creation(modes: usize, j: usize) -> CMat {
    annihilation(modes, j).adjoint().to_owned()
}

pub fn number(modes: usize, j: usize) -> CMat {
    let d = dim(modes);
    Mat::from_fn(d, d, |a, b| if a == b && occupation(a, modes, j) { ONE } else { ZERO })
}

/// `Σ_ij k_ij c_i† c_j`.
pub fn quadratic(k: &CMat) -> CMat {
    let modes = k.nrows();
    let ops: Vec<CMat> = (0..modes).map(|j| annihilation(modes, j)).collect();
    let d = dim(modes);
    let mut out = Mat::zeros(d, d);
    for i in 0..modes {
        let cd = ops[i].adjoint().to_owned();
        for j in 0..modes {
            if k[(i, j)] != ZERO {
                let term = &cd * &ops[j];
                out += faer::Scale(k[(i, j)]) * &term;
            }
        }
    }
    out
}

/// Parity operator `(−1)^N`.
pub fn parity(modes: usize) -> CMat {
    let d = dim(modes);
    Mat::from_fn(d, d, |a, b| {
        if a != b {
            ZERO
        } else if particle_number(a) % 2 == 0 {
            ONE
        } else {
            -ONE
        }
    })
}
