//! Dynamical-map tomography: the system is prepared maximally entangled with
//! a particle-hole ancilla, and the evolved system+ancilla state is unfolded
//! into `Λ(τ)`. The TCL generator, memory times and slippage follow from the
//! sampled maps.

use serde::{Deserialize, Serialize};

use crate::fock;
use crate::linalg::{self, CMat};
use crate::state::DensityOperator;
use crate::superop::{unvectorize, SuperOperator};
use crate::{c64, Error, Result};

/// Choi minimum eigenvalue below which an extracted map is rejected.
pub const CP_TOLERANCE: f64 = 1e-5;
/// Maps with a larger condition number are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// How the ancilla indices are unfolded. `Fermionic` is the correct
/// convention; `Corrupted` evaluates the string sign with the output index
/// in place of the input one, a deliberate fault for the validation suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SignConvention {
    #[default]
    Fermionic,
    Corrupted,
}

/// Amplitude signs `η_x` of `|x x̄⟩` in `Π_i (s_i† + a_i†)/√2 |0⟩`, where
/// the system modes precede the ancillas and `x̄` is the complement of `x`.
pub fn bell_signs(n_system: usize) -> Vec<f64> {
    let k = 2 * n_system;
    let dim = fock::dim(k);
    let mut state = vec![0.0f64; dim];
    state[0] = 1.0;
    // apply factors right to left so that the product reads left to right
    for i in (0..n_system).rev() {
        let mut next = vec![0.0; dim];
        for (n, &amp) in state.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            for mode in [i, n_system + i] {
                let bit = 1usize << (k - 1 - mode);
                if n & bit == 0 {
                    let preceding = (n >> (k - mode)).count_ones();
                    let sign = if preceding % 2 == 0 { 1.0 } else { -1.0 };
                    next[n | bit] += sign * amp;
                }
            }
        }
        state = next;
    }
    let d = fock::dim(n_system);
    (0..d)
        .map(|x| {
            let xbar = !x & (d - 1);
            state[(x << n_system) | xbar].signum()
        })
        .collect()
}

/// Unfold the evolved system+ancilla state into `Λ(τ)`:
/// `Λ[x'y', xy] = d η_x η_y (−1)^{(|y|+|y'|)(|x|+|y|)} ρ_SA[(x', x̄), (y', ȳ)]`.
pub fn extract_map(
    rho_sa: &DensityOperator,
    n_system: usize,
    tau: f64,
    convention: SignConvention,
) -> Result<SuperOperator> {
    if rho_sa.modes != 2 * n_system {
        return Err(Error::DimensionMismatch(format!(
            "system+ancilla state has {} modes, expected {}",
            rho_sa.modes,
            2 * n_system
        )));
    }
    let d = fock::dim(n_system);
    let eta = bell_signs(n_system);
    let weight = |v: usize| v.count_ones() as usize;
    let mut m = faer::Mat::<c64>::zeros(d * d, d * d);
    for x in 0..d {
        for y in 0..d {
            let (xb, yb) = (!x & (d - 1), !y & (d - 1));
            for xp in 0..d {
                for yp in 0..d {
                    let string = match convention {
                        SignConvention::Fermionic => weight(x),
                        SignConvention::Corrupted => weight(xp),
                    };
                    let parity = ((weight(y) + weight(yp)) * (string + weight(y))) % 2;
                    let sign = if parity == 0 { 1.0 } else { -1.0 } * eta[x] * eta[y];
                    let v = rho_sa.matrix[((xp << n_system) | xb, (yp << n_system) | yb)];
                    m[(xp + d * yp, x + d * y)] = v * (sign * d as f64);
                }
            }
        }
    }
    let map = SuperOperator { matrix: m, dim: d, tau };
    let min_eig = map.choi_min_eigenvalue();
    if min_eig < -CP_TOLERANCE {
        return Err(Error::CpViolation { tau, min_eigenvalue: min_eig });
    }
    Ok(map)
}

/// `L(τ_k) = (dΛ/dτ)(τ_k) Λ(τ_k)⁻¹` with central differences inside the
/// series and second-order one-sided differences at its ends.
pub fn tcl_generator(maps: &[SuperOperator], index: usize) -> Result<SuperOperator> {
    let n = maps.len();
    if n < 3 {
        return Err(Error::InvalidInput("at least three map samples are needed".into()));
    }
    if index >= n {
        return Err(Error::InvalidInput(format!("sample {index} of {n}")));
    }
    let dt = maps[1].tau - maps[0].tau;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("map samples must be increasing in time".into()));
    }
    let lin = |terms: &[(usize, f64)]| {
        let mut acc = maps[terms[0].0].scaled(terms[0].1);
        for &(k, c) in &terms[1..] {
            acc = acc.add(&maps[k].scaled(c));
        }
        acc
    };
    let h = 1.0 / dt;
    let deriv = if index == 0 {
        lin(&[(0, -1.5 * h), (1, 2.0 * h), (2, -0.5 * h)])
    } else if index == n - 1 {
        lin(&[(n - 1, 1.5 * h), (n - 2, -2.0 * h), (n - 3, 0.5 * h)])
    } else {
        lin(&[(index + 1, 0.5 * h), (index - 1, -0.5 * h)])
    };
    let map = &maps[index];
    let cond = map.condition_number();
    if !(cond < SINGULAR_CONDITION) {
        return Err(Error::SingularMap { tau: map.tau, condition: cond });
    }
    let inv = linalg::inverse(&map.matrix);
    Ok(SuperOperator { matrix: &deriv.matrix * &inv, dim: map.dim, tau: map.tau })
}

/// Generators at every sample.
pub fn generator_series(maps: &[SuperOperator]) -> Vec<Result<SuperOperator>> {
    (0..maps.len()).map(|k| tcl_generator(maps, k)).collect()
}

/// Relative size below which an eigenvalue counts as zero.
pub const NULL_TOLERANCE: f64 = 1e-6;

/// Unit-trace Hermitian eigenoperator of `L` with eigenvalue zero.
pub fn fixed_point(l: &SuperOperator) -> Result<DensityOperator> {
    let (vals, vecs) = linalg::eigen(&l.matrix);
    let radius = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].norm().partial_cmp(&vals[b].norm()).unwrap());
    let tol = NULL_TOLERANCE * radius;
    if vals.len() > 1 && vals[order[1]].norm() <= tol {
        return Err(Error::DegenerateFixedPoint);
    }
    let k = order[0];
    let v: Vec<c64> = (0..vals.len()).map(|i| vecs[(i, k)]).collect();
    let x = unvectorize(&v, l.dim);
    let tr = linalg::trace(&x);
    if tr.norm() < 1e-12 {
        return Err(Error::ZeroTrace);
    }
    let x = linalg::hermitian_part(&linalg::scale(&x, tr.inv()));
    DensityOperator::new(x)
}

/// Instantaneous relaxation rates of a generator.
#[derive(Debug, Clone, PartialEq)]
pub enum Rates {
    /// Nonzero eigenvalue of the population block of a single mode.
    Single(c64),
    /// Full spectrum sorted by `|Re λ|`.
    Spectrum(Vec<c64>),
}

pub fn instantaneous_rate(l: &SuperOperator) -> Rates {
    if l.dim == 2 {
        // population block in column stacking: indices 0 = |0⟩⟨0|, 3 = |1⟩⟨1|
        Rates::Single(l.matrix[(0, 0)] + l.matrix[(3, 3)])
    } else {
        let mut v = l.eigenvalues();
        sort_by_decay(&mut v);
        Rates::Spectrum(v)
    }
}

pub fn sort_by_decay(v: &mut [c64]) {
    v.sort_by(|a, b| {
        let key = |z: &c64| (z.re.abs(), z.im.abs(), z.re, z.im);
        key(a).partial_cmp(&key(b)).unwrap()
    });
}

/// Slowest nonzero relaxation rate `|Re λ₂|` of a converged generator.
pub fn reference_rate(l: &SuperOperator) -> f64 {
    match instantaneous_rate(l) {
        Rates::Single(z) => z.norm(),
        Rates::Spectrum(v) => {
            let radius = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            v.iter()
                .map(|z| z.re.abs())
                .find(|&r| r > NULL_TOLERANCE * radius)
                .unwrap_or(0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    TraceNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryTimes {
    pub tau_l: f64,
    /// `None` when the map criterion is not met inside the sampled window.
    pub tau_lambda: Option<f64>,
    pub epsilon: f64,
    pub norm_kind: NormKind,
    /// Index of the sample at `tau_l`.
    pub index_l: usize,
    pub index_lambda: Option<usize>,
}

/// `τ_L` must fall inside this fraction of the usable window.
pub const CONVERGED_FRACTION: f64 = 0.9;

/// Earliest sample from which `ok` holds at every later sample.
fn convergence_index(ok: &[bool]) -> Option<usize> {
    if !*ok.last()? {
        return None;
    }
    let last_bad = ok.iter().rposition(|&b| !b);
    Some(last_bad.map_or(0, |k| k + 1))
}

/// `τ_Λ`: `‖Λ(τ')[ρ_ss] − ρ_ss‖₁ < ε` for all later samples; `τ_L`:
/// `‖L(τ')[ρ_ss]‖₁ < ε |λ₂|` for all later samples. `ρ_ss` is the fixed point
/// of the last available generator, and `|λ₂|` its slowest relaxation rate.
/// Samples after the last invertible map are ignored: once every decay mode
/// has died out `Λ` is numerically singular and carries no generator. Only the
/// generator criterion is required to converge; the map criterion typically
/// needs a window of several relaxation times.
pub fn memory_times(
    maps: &[SuperOperator],
    generators: &[Result<SuperOperator>],
    epsilon: f64,
) -> Result<(MemoryTimes, DensityOperator)> {
    if maps.len() != generators.len() {
        return Err(Error::DimensionMismatch("one generator per map sample".into()));
    }
    let end = match generators.iter().rposition(|g| g.is_ok()) {
        Some(k) => k + 1,
        None => {
            return Err(generators
                .last()
                .and_then(|g| g.as_ref().err().cloned())
                .unwrap_or_else(|| Error::InvalidInput("no generator samples".into())))
        }
    };
    let (maps, generators) = (&maps[..end], &generators[..end]);
    let last = generators[end - 1].as_ref().map_err(|e| e.clone())?;
    let rho_ss = fixed_point(last)?;
    let rate = reference_rate(last);
    let map_ok: Vec<bool> = maps
        .iter()
        .map(|m| linalg::trace_norm(&(&m.apply(&rho_ss.matrix) - &rho_ss.matrix)) < epsilon)
        .collect();
    let gen_ok: Vec<bool> = generators
        .iter()
        .map(|g| match g {
            Ok(l) => linalg::trace_norm(&l.apply(&rho_ss.matrix)) < epsilon * rate,
            Err(_) => false,
        })
        .collect();
    let il = convergence_index(&gen_ok).ok_or_else(|| Error::NotConverged("generator fixed point".into()))?;
    // the last sample satisfies the criterion by construction of ρ_ss
    let (first, last_tau) = (maps[0].tau, maps[end - 1].tau);
    if end > 1 && maps[il].tau > first + CONVERGED_FRACTION * (last_tau - first) {
        return Err(Error::NotConverged(format!(
            "generator criterion only met from τ = {} in a window ending at {}",
            maps[il].tau, last_tau
        )));
    }
    let ia = convergence_index(&map_ok);
    Ok((
        MemoryTimes {
            tau_l: maps[il].tau,
            tau_lambda: ia.map(|k| maps[k].tau),
            epsilon,
            norm_kind: NormKind::TraceNorm,
            index_l: il,
            index_lambda: ia,
        },
        rho_ss,
    ))
}

/// `S = Λ(τ_L)` at the sample nearest `tau_l`, moving forward past singular samples.
pub fn slippage(maps: &[SuperOperator], tau_l: f64) -> Result<(usize, SuperOperator)> {
    let nearest = maps
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.tau - tau_l).abs().partial_cmp(&(b.1.tau - tau_l).abs()).unwrap())
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidInput("no map samples".into()))?;
    let mut worst = 0.0f64;
    for k in nearest..(nearest + 10).min(maps.len()) {
        let cond = maps[k].condition_number();
        if cond < SINGULAR_CONDITION {
            return Ok((k, maps[k].clone()));
        }
        worst = worst.max(cond);
    }
    Err(Error::SingularMap { tau: maps[nearest].tau, condition: worst })
}

/// System+ancilla correlation block → map, for a whole series.
pub fn maps_from_blocks(
    blocks: &[CMat],
    taus: &[f64],
    n_system: usize,
    convention: SignConvention,
) -> Result<Vec<SuperOperator>> {
    blocks
        .iter()
        .zip(taus)
        .map(|(b, &t)| {
            let rho = crate::gaussian::gaussian_state(b)?;
            extract_map(&rho, n_system, t, convention)
        })
        .collect()
}
