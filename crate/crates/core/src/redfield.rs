//! Second-order time-convolutionless (Redfield) generator for a dot coupled
//! through `H_I = Σ_α (s_α† B_α + B_α† s_α)`.
//!
//! For an operator `X` of fermionic parity `p`,
//!
//! ```text
//! dX/dt = −i[H_S, X] − Σ_α { Q A₁ X + Q† A₂ X + X A₂† Q + X A₁† Q†
//!                           − (−1)^p (Q X A₂† + Q† X A₁† + A₁ X Q + A₂ X Q†) }
//! A₁(t) = ∫₀ᵗ Φ_f(s) Q̃†(−s) ds,  A₂(t) = ∫₀ᵗ Φ_e(s) Q̃(−s) ds
//! ```
//!
//! with `Q̃(−s) = e^{−iH_S s} Q e^{iH_S s}`, `Φ_f(s) = ∫ J f e^{iωs}` and
//! `Φ_e(s) = ∫ J (1 − f) e^{−iωs}`. The time integrals are done analytically
//! per Bohr frequency, leaving one frequency quadrature.

use faer::Mat;

use crate::bath::{principal_value, BathSpec, Branch, QuadratureGrid, WeightFunction};
use crate::fock;
use crate::gaussian::{attachment, Lead, SystemSpec};
use crate::linalg::{self, CMat, ZERO};
use crate::state::DensityOperator;
use crate::superop::SuperOperator;
use crate::{c64, Error, Result};

pub const DEFAULT_QUADRATURE_POINTS: usize = 4000;
/// Relative decay `|C(τ)| / |C(0)|` that defines the correlation memory time.
pub const DEFAULT_DECAY_THRESHOLD: f64 = 0.05;

/// `∫₀ᵗ e^{ixs} ds`.
fn kernel(x: f64, t: f64) -> c64 {
    let y = x * t;
    let (re, im) = if y.abs() < 1e-4 {
        let y2 = y * y;
        (1.0 - y2 / 6.0, y / 2.0 - y * y2 / 24.0)
    } else {
        let h = (0.5 * y).sin();
        (y.sin() / y, 2.0 * h * h / y)
    };
    c64::new(re, im) * t
}

struct Coupling {
    bath: BathSpec,
    /// Annihilator of the attached mode, Fock basis.
    q: CMat,
    /// `Q` in the eigenbasis of `H_S`.
    q_eig: CMat,
    grid: QuadratureGrid,
    filled_w: Vec<f64>,
    empty_w: Vec<f64>,
}

impl Coupling {
    fn filled_integral(&self, nu: f64, t: f64) -> c64 {
        if t.is_infinite() {
            let w = self.bath.branch(Branch::Filled);
            return c64::new(std::f64::consts::PI * w.eval(nu), principal_value(&w, &self.grid, nu));
        }
        self.grid.nodes.iter().zip(&self.filled_w).map(|(&om, &w)| kernel(om - nu, t) * w).sum()
    }

    fn empty_integral(&self, nu: f64, t: f64) -> c64 {
        if t.is_infinite() {
            let w = self.bath.branch(Branch::Empty);
            return c64::new(std::f64::consts::PI * w.eval(-nu), -principal_value(&w, &self.grid, -nu));
        }
        self.grid.nodes.iter().zip(&self.empty_w).map(|(&om, &w)| kernel(-(om + nu), t) * w).sum()
    }
}

/// Redfield model of a non-interacting system with one or two leads.
pub struct RedfieldModel {
    n_system: usize,
    h: CMat,
    energies: Vec<f64>,
    basis: CMat,
    couplings: Vec<Coupling>,
}

impl RedfieldModel {
    pub fn new(system: &SystemSpec, baths: &[BathSpec], quadrature_points: usize) -> Result<Self> {
        system.validate()?;
        if baths.is_empty() || baths.len() > 2 {
            return Err(Error::InvalidInput(format!("{} baths", baths.len())));
        }
        let n = system.n_modes();
        let h = system.many_body_hamiltonian();
        let (energies, basis) = linalg::hermitian_eigen(&h);
        let d = energies.len();
        let mut couplings = Vec::new();
        for (k, bath) in baths.iter().enumerate() {
            let lead = if k == 0 { Lead::Left } else { Lead::Right };
            let q = fock::annihilation(n, attachment(lead, n));
            let q_eig = &(basis.adjoint() * &q) * &basis;
            let mut cuts = bath.fermi_breakpoints();
            for m in 0..d {
                for l in 0..d {
                    if q_eig[(m, l)].norm() > 1e-14 || q_eig[(l, m)].norm() > 1e-14 {
                        let nu = energies[m] - energies[l];
                        cuts.push(nu);
                        cuts.push(-nu);
                    }
                }
            }
            let grid = QuadratureGrid::band(bath.density.support(), &cuts, quadrature_points)?;
            let f = bath.branch(Branch::Filled);
            let e = bath.branch(Branch::Empty);
            let filled_w = grid.nodes.iter().zip(&grid.weights).map(|(&x, &w)| w * f.eval(x)).collect();
            let empty_w = grid.nodes.iter().zip(&grid.weights).map(|(&x, &w)| w * e.eval(x)).collect();
            couplings.push(Coupling { bath: *bath, q, q_eig, grid, filled_w, empty_w });
        }
        Ok(Self { n_system: n, h, energies, basis, couplings })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.h
    }

    fn filtered(&self, c: &Coupling, t: f64) -> (CMat, CMat) {
        let d = self.dim();
        let mut a1 = Mat::<c64>::zeros(d, d);
        let mut a2 = Mat::<c64>::zeros(d, d);
        if t == 0.0 {
            return (a1, a2);
        }
        for m in 0..d {
            for l in 0..d {
                let nu = self.energies[m] - self.energies[l];
                let qd = c.q_eig[(l, m)].conj();
                if qd.norm() > 1e-14 {
                    a1[(m, l)] = qd * c.filled_integral(nu, t);
                }
                let q = c.q_eig[(m, l)];
                if q.norm() > 1e-14 {
                    a2[(m, l)] = q * c.empty_integral(nu, t);
                }
            }
        }
        let to_fock = |a: &CMat| &(&self.basis * a) * self.basis.adjoint();
        (to_fock(&a1), to_fock(&a2))
    }

    /// `L_RE(t)`; `t = f64::INFINITY` gives the converged generator.
    pub fn generator(&self, t: f64) -> SuperOperator {
        let filtered: Vec<(CMat, CMat)> = self.couplings.iter().map(|c| self.filtered(c, t)).collect();
        self.generator_from(&filtered).with_tau(t)
    }

    fn generator_from(&self, filtered: &[(CMat, CMat)]) -> SuperOperator {
        let d = self.dim();
        let h = &self.h;
        let mut out = Mat::<c64>::zeros(d * d, d * d);
        for col in 0..d * d {
            let (i, j) = (col % d, col / d);
            let mut x = Mat::<c64>::zeros(d, d);
            x[(i, j)] = c64::new(1.0, 0.0);
            let parity = (i.count_ones() + j.count_ones()) % 2;
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            let mut dx = linalg::scale(&(&(h * &x) - &(&x * h)), c64::new(0.0, -1.0));
            for (c, (a1, a2)) in self.couplings.iter().zip(filtered) {
                let q = &c.q;
                let qd = q.adjoint().to_owned();
                let a1d = a1.adjoint().to_owned();
                let a2d = a2.adjoint().to_owned();
                let direct = &(&(&(q * a1) * &x) + &(&(&qd * a2) * &x))
                    + &(&(&(&x * &a2d) * q) + &(&(&x * &a1d) * &qd));
                let sandwich = &(&(&(q * &x) * &a2d) + &(&(&qd * &x) * &a1d))
                    + &(&(&(a1 * &x) * q) + &(&(a2 * &x) * &qd));
                dx = &dx - &(&direct - &linalg::scale(&sandwich, c64::new(sign, 0.0)));
            }
            for (row, v) in crate::superop::vectorize(&dx).into_iter().enumerate() {
                out[(row, col)] = v;
            }
        }
        SuperOperator { matrix: out, dim: d, tau: 0.0 }
    }

    /// `Λ_RE` on the uniform grid `k·dt`, `k = 0..n_steps`, by fourth-order Runge-Kutta.
    pub fn propagate(&self, dt: f64, n_steps: usize) -> Vec<SuperOperator> {
        let d = self.dim();
        let mut maps = Vec::with_capacity(n_steps + 1);
        let mut lam = SuperOperator::identity(d);
        maps.push(lam.clone());
        let mut l_now = self.generator(0.0);
        for k in 0..n_steps {
            let t = k as f64 * dt;
            let l_mid = self.generator(t + 0.5 * dt);
            let l_next = self.generator(t + dt);
            let k1 = l_now.compose(&lam);
            let k2 = l_mid.compose(&lam.add(&k1.scaled(0.5 * dt)));
            let k3 = l_mid.compose(&lam.add(&k2.scaled(0.5 * dt)));
            let k4 = l_next.compose(&lam.add(&k3.scaled(dt)));
            let incr = k1.add(&k2.scaled(2.0)).add(&k3.scaled(2.0)).add(&k4);
            lam = lam.add(&incr.scaled(dt / 6.0)).with_tau(t + dt);
            maps.push(lam.clone());
            l_now = l_next;
        }
        maps
    }

    /// `X ↦ e^{−iH_S t} X e^{iH_S t}`.
    fn free(&self, x: &CMat, t: f64) -> CMat {
        let d = self.dim();
        let phase: Vec<c64> = self.energies.iter().map(|&e| c64::from_polar(1.0, -e * t)).collect();
        let xe = &(self.basis.adjoint() * x) * &self.basis;
        let rot = Mat::from_fn(d, d, |m, l| xe[(m, l)] * phase[m] * phase[l].conj());
        &(&self.basis * &rot) * self.basis.adjoint()
    }

    /// First-order inverse of `Λ_RE(τ_m)` applied to `ρ_ss`:
    /// `ρ_f = U_{−τ}[ρ_ss] − ∫₀^τ U_{−t} D_t U_{t−τ}[ρ_ss] dt`, with `D_t`
    /// the dissipative part of `L_RE(t)` and `U_t[X] = e^{−iH_S t} X e^{iH_S t}`.
    pub fn perturbative_fast_state(&self, tau_m: f64, rho_ss: &DensityOperator, dt: f64) -> Result<DensityOperator> {
        if rho_ss.dim() != self.dim() {
            return Err(Error::DimensionMismatch("steady state dimension".into()));
        }
        let rho = &rho_ss.matrix;
        let mut n = (tau_m / dt).ceil() as usize;
        n += n % 2;
        let mut acc = Mat::<c64>::zeros(self.dim(), self.dim());
        if n > 0 {
            let h = tau_m / n as f64;
            let commutator = SuperOperator::commutator(&self.h);
            for k in 0..=n {
                let t = k as f64 * h;
                let w = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let dissipator = self.generator(t).sub(&commutator);
                let inner = dissipator.apply(&self.free(rho, t - tau_m));
                acc += linalg::scale(&self.free(&inner, -t), c64::new(w * h / 3.0, 0.0));
            }
        }
        let rf = &self.free(rho, -tau_m) - &acc;
        DensityOperator::new(linalg::hermitian_part(&rf))?.normalized()
    }

    /// Stationary state of the converged generator.
    pub fn steady_state(&self) -> Result<DensityOperator> {
        crate::tomography::fixed_point(&self.generator(f64::INFINITY))
    }
}

/// `(C⁺(τ), C⁻(τ)) = (∫ J f e^{iωτ}, ∫ J (1 − f) e^{−iωτ})`.
pub fn bath_correlation(bath: &BathSpec, tau: f64) -> (c64, c64) {
    let grid = QuadratureGrid::band(bath.density.support(), &bath.fermi_breakpoints(), DEFAULT_QUADRATURE_POINTS)
        .expect("band quadrature");
    correlation_on_grid(bath, &grid, tau)
}

fn correlation_on_grid(bath: &BathSpec, grid: &QuadratureGrid, tau: f64) -> (c64, c64) {
    let f = bath.branch(Branch::Filled);
    let e = bath.branch(Branch::Empty);
    let mut plus = ZERO;
    let mut minus = ZERO;
    for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
        let phase = c64::from_polar(1.0, x * tau);
        plus += phase * (w * f.eval(x));
        minus += phase.conj() * (w * e.eval(x));
    }
    (plus, minus)
}

/// Earliest `τ` after which `|C^±(τ')| / |C^±(0)| < threshold` on the whole
/// grid `[0, tau_max]`.
pub fn correlation_memory_time(bath: &BathSpec, threshold: f64, tau_max: f64, dt: f64) -> Result<f64> {
    let grid = QuadratureGrid::band(bath.density.support(), &bath.fermi_breakpoints(), DEFAULT_QUADRATURE_POINTS)?;
    let (p0, m0) = correlation_on_grid(bath, &grid, 0.0);
    let n = (tau_max / dt).round() as usize;
    let mut last_bad = None;
    for k in 0..=n {
        let t = k as f64 * dt;
        let (p, m) = correlation_on_grid(bath, &grid, t);
        let bad = (p0.norm() > 0.0 && p.norm() >= threshold * p0.norm())
            || (m0.norm() > 0.0 && m.norm() >= threshold * m0.norm());
        if bad {
            last_bad = Some(k);
        }
    }
    match last_bad {
        Some(k) if k == n => Err(Error::NotConverged("bath correlation decay".into())),
        Some(k) => Ok((k + 1) as f64 * dt),
        None => Ok(0.0),
    }
}
