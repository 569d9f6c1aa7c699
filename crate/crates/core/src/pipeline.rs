//! End-to-end pipeline: chains → Gaussian propagation of the Choi state →
//! sampled maps → generator, memory times, slippage and Mpemba report.

use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, ThermofieldChains};
use crate::fock;
use crate::gaussian::{
    assemble_hamiltonian, gaussian_part, initial_correlation_matrix, Leads, ModeLayout, Propagator,
    SystemInit, SystemSpec,
};
use crate::linalg::{self, CMat, RMat};
use crate::mpemba::{classify, damping_basis, DampingBasis, FastState, MpembaReport};
use crate::state::{trace_distance, DensityOperator};
use crate::superop::SuperOperator;
use crate::tomography::{
    self, fixed_point, generator_series, maps_from_blocks, memory_times, slippage, MemoryTimes, SignConvention,
};
use crate::{c64, Error, Result};

pub const DEFAULT_QUADRATURE_POINTS: usize = 2000;
pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// `0, dt, 2dt, …` up to `tau_max` inclusive (to rounding).
pub fn uniform_grid(dt: f64, tau_max: f64) -> Vec<f64> {
    let n = (tau_max / dt + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub system: SystemSpec,
    /// Left bath first; a second entry is the right bath.
    pub baths: Vec<BathSpec>,
    pub quadrature_points: usize,
}

/// System, ancillas and chains with a diagonalised single-particle Hamiltonian.
pub struct Model {
    pub system: SystemSpec,
    pub baths: Vec<BathSpec>,
    pub layout: ModeLayout,
    pub leads: Leads,
    pub hamiltonian: RMat,
    propagator: Propagator,
}

impl Model {
    pub fn build(spec: &ModelSpec) -> Result<Self> {
        spec.system.validate()?;
        if spec.baths.is_empty() || spec.baths.len() > 2 {
            return Err(Error::InvalidInput(format!("{} baths (expected 1 or 2)", spec.baths.len())));
        }
        let mut chains = Vec::new();
        for b in &spec.baths {
            chains.push(ThermofieldChains::from_bath(b, spec.quadrature_points)?);
        }
        let mut it = chains.into_iter();
        let leads = Leads { left: it.next().unwrap(), right: it.next() };
        Self::from_leads(spec.system.clone(), spec.baths.clone(), leads)
    }

    pub fn from_leads(system: SystemSpec, baths: Vec<BathSpec>, leads: Leads) -> Result<Self> {
        let layout = ModeLayout::for_leads(system.n_modes(), &leads);
        let hamiltonian = assemble_hamiltonian(&system, &leads, &layout)?;
        let propagator = Propagator::new(&hamiltonian);
        Ok(Self { system, baths, layout, leads, hamiltonian, propagator })
    }

    pub fn n_system(&self) -> usize {
        self.system.n_modes()
    }

    pub fn dim(&self) -> usize {
        fock::dim(self.n_system())
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// System+ancilla correlation blocks of the evolved Choi state.
    pub fn choi_blocks(&self, taus: &[f64]) -> Result<Vec<CMat>> {
        let c0 = initial_correlation_matrix(&self.layout, &SystemInit::Choi)?;
        let block = self.propagator.block_evolution(&c0, &self.layout.system_ancilla_modes());
        Ok(block.series(taus))
    }

    pub fn map_series(&self, taus: &[f64], convention: SignConvention) -> Result<Vec<SuperOperator>> {
        let blocks = self.choi_blocks(taus)?;
        maps_from_blocks(&blocks, taus, self.n_system(), convention)
    }

    /// System correlation blocks for a Gaussian initial system state.
    pub fn system_blocks(&self, init: &SystemInit, taus: &[f64]) -> Result<Vec<CMat>> {
        let c0 = initial_correlation_matrix(&self.layout, init)?;
        let block = self.propagator.block_evolution(&c0, &self.layout.system_modes());
        Ok(block.series(taus))
    }

    /// Copy of the model with all first-site couplings scaled by `factor` in weight.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let mut leads = self.leads.clone();
        leads.left.rescale_first_site(factor);
        if let Some(r) = leads.right.as_mut() {
            r.rescale_first_site(factor);
        }
        Self::from_leads(self.system.clone(), self.baths.clone(), leads)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuenchProfile {
    Sudden,
    LinearRamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quench {
    pub tau_q: f64,
    pub profile: QuenchProfile,
}

impl Quench {
    pub fn sudden() -> Self {
        Self { tau_q: 0.0, profile: QuenchProfile::Sudden }
    }

    pub fn is_sudden(&self) -> bool {
        self.profile == QuenchProfile::Sudden || self.tau_q <= 0.0
    }
}

/// Maps on the uniform grid `taus` (step `dt`, starting at 0) when the
/// couplings are switched on as `Γ(τ) = Γ τ/τ_q` for `τ < τ_q`. The ramp is
/// applied piecewise constant over each step at its midpoint value.
pub fn quench_map_series(
    model: &Model,
    quench: &Quench,
    taus: &[f64],
    convention: SignConvention,
) -> Result<Vec<SuperOperator>> {
    if quench.is_sudden() {
        return model.map_series(taus, convention);
    }
    if taus.len() < 2 || taus[0] != 0.0 {
        return Err(Error::InvalidInput("quench grid must start at 0".into()));
    }
    let dt = taus[1] - taus[0];
    let n_ramp = (quench.tau_q / dt).round() as usize;
    if ((n_ramp as f64) * dt - quench.tau_q).abs() > 1e-9 * quench.tau_q.max(1.0) {
        return Err(Error::InvalidInput("tau_q must be a multiple of dt".into()));
    }
    let sa = model.layout.system_ancilla_modes();
    let pick = |c: &CMat| faer::Mat::from_fn(sa.len(), sa.len(), |i, j| c[(sa[i], sa[j])]);
    let mut c = initial_correlation_matrix(&model.layout, &SystemInit::Choi)?;
    let mut blocks = vec![pick(&c.entries)];
    for k in 0..n_ramp.min(taus.len() - 1) {
        let factor = (k as f64 + 0.5) / n_ramp as f64;
        let slice = model.rescaled(factor)?;
        c = slice.propagator().propagate(&c, dt);
        blocks.push(pick(&c.entries));
    }
    if taus.len() > n_ramp + 1 {
        let rest: Vec<f64> = taus[n_ramp + 1..].iter().map(|t| t - taus[n_ramp]).collect();
        let block = model.propagator().block_evolution(&c, &sa);
        blocks.extend(block.series(&rest));
    }
    maps_from_blocks(&blocks, taus, model.n_system(), convention)
}

/// Everything derived from a uniformly sampled map series.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub taus: Vec<f64>,
    pub maps: Vec<SuperOperator>,
    pub generators: Vec<Result<SuperOperator>>,
    pub memory: MemoryTimes,
    /// Fixed point of the final generator, used for the memory-time criteria.
    pub final_fixed_point: DensityOperator,
    pub slippage_index: usize,
    pub slippage: SuperOperator,
    /// Generator at the slippage sample.
    pub converged_generator: SuperOperator,
    /// `ρ(∞) = ρ_TDFP(τ_L)`.
    pub steady_state: DensityOperator,
    pub basis: DampingBasis,
    pub report: MpembaReport,
    pub fast: FastState,
}

/// `Λ†Λ = 1` up to `tol`: the map is a unitary conjugation.
pub fn is_unitary_channel(m: &SuperOperator, tol: f64) -> bool {
    let gram = m.matrix.adjoint() * &m.matrix;
    linalg::max_abs(&(&gram - &linalg::identity(gram.nrows()))) < tol
}

pub const UNITARY_TOLERANCE: f64 = 1e-8;

pub fn analyze(maps: Vec<SuperOperator>, epsilon: f64, amplitude_tol: f64) -> Result<Analysis> {
    let taus: Vec<f64> = maps.iter().map(|m| m.tau).collect();
    let generators = generator_series(&maps);
    if maps.last().is_some_and(|m| is_unitary_channel(m, UNITARY_TOLERANCE)) {
        return closed(taus, maps, generators, epsilon);
    }
    let (memory, final_fixed_point) = memory_times(&maps, &generators, epsilon)?;
    let (slippage_index, slippage) = slippage(&maps, memory.tau_l)?;
    let converged_generator = generators[slippage_index].clone()?;
    let steady_state = fixed_point(&converged_generator)?;
    let basis = damping_basis(&converged_generator)?;
    let (report, fast) = classify(&basis, &slippage, &steady_state, amplitude_tol)?;
    Ok(Analysis {
        taus,
        maps,
        generators,
        memory,
        final_fixed_point,
        slippage_index,
        slippage,
        converged_generator,
        steady_state,
        basis,
        report,
        fast,
    })
}

/// Decoupled dynamics: no relaxation and no unique fixed point. The generator
/// is constant, so `τ_L = τ_Λ = 0` and `S = Λ(0)`; the maximally mixed state
/// stands in for `ρ(∞)` since every unitary leaves it invariant.
fn closed(
    taus: Vec<f64>,
    maps: Vec<SuperOperator>,
    generators: Vec<Result<SuperOperator>>,
    epsilon: f64,
) -> Result<Analysis> {
    let d = maps[0].dim;
    let mixed = DensityOperator::diagonal(&vec![1.0 / d as f64; d])?;
    let converged_generator = generators[0].clone()?;
    let basis = damping_basis(&converged_generator)?;
    let slippage = maps[0].clone();
    let amps: Vec<(f64, f64)> =
        crate::mpemba::mode_amplitudes(&basis, &slippage, &mixed).iter().map(|z| (z.re, z.im)).collect();
    let report = MpembaReport {
        kind: crate::mpemba::MpembaKind::None,
        mode_amplitudes_fast: amps.clone(),
        mode_amplitudes_ss: amps,
        slowest_excited_fast: None,
        slowest_excited_ss: None,
        physical: true,
        delta: 0.0,
        eigenvalues: basis.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
    };
    let memory = MemoryTimes {
        tau_l: taus[0],
        tau_lambda: Some(taus[0]),
        epsilon,
        norm_kind: tomography::NormKind::TraceNorm,
        index_l: 0,
        index_lambda: Some(0),
    };
    Ok(Analysis {
        taus,
        maps,
        generators,
        memory,
        final_fixed_point: mixed.clone(),
        slippage_index: 0,
        slippage,
        converged_generator,
        steady_state: mixed.clone(),
        basis,
        report,
        fast: FastState { state: mixed, physical: true },
    })
}

impl Analysis {
    /// Fixed point of `L(τ)` at each sample, where it is well defined.
    pub fn tdfp_series(&self) -> Vec<Option<DensityOperator>> {
        self.generators
            .iter()
            .map(|g| g.as_ref().ok().and_then(|l| fixed_point(l).ok()))
            .collect()
    }

    /// `λ₂(τ)` for a single dot; slowest nonzero `Re λ` otherwise.
    pub fn rate_series(&self) -> Vec<Option<c64>> {
        self.generators
            .iter()
            .map(|g| {
                g.as_ref().ok().map(|l| match tomography::instantaneous_rate(l) {
                    tomography::Rates::Single(z) => z,
                    tomography::Rates::Spectrum(_) => c64::new(-tomography::reference_rate(l), 0.0),
                })
            })
            .collect()
    }

    /// `ρ(∞) + Σ_{μ≥2} e^{λ_μ(τ−τ_L)} α_μ F_μ` for `rho0`.
    pub fn reconstruct(&self, rho0: &DensityOperator, tau: f64) -> CMat {
        let start = self.slippage.apply(&rho0.matrix);
        let amps = self.basis.amplitudes(&start);
        self.basis.evolve(&amps, tau - self.taus[self.slippage_index])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Engine {
    /// Gaussian propagation for Gaussian initial states, maps otherwise.
    #[default]
    Auto,
    Gaussian,
    Map,
}

/// Evolve `rho0` with fresh baths on the grid `taus`.
pub fn relaxation_run(
    model: &Model,
    rho0: &DensityOperator,
    taus: &[f64],
    engine: Engine,
) -> Result<Vec<DensityOperator>> {
    if rho0.modes != model.n_system() {
        return Err(Error::DimensionMismatch(format!(
            "initial state on {} modes, system has {}",
            rho0.modes,
            model.n_system()
        )));
    }
    let (corr, gaussian) = gaussian_part(rho0, 1e-10);
    let use_gaussian = match engine {
        Engine::Gaussian if !gaussian => {
            return Err(Error::NotProductForm("initial state is not Gaussian".into()));
        }
        Engine::Gaussian => true,
        Engine::Map => false,
        Engine::Auto => gaussian,
    };
    if use_gaussian {
        let blocks = model.system_blocks(&SystemInit::Correlations(corr), taus)?;
        blocks.iter().map(crate::gaussian::gaussian_state).collect()
    } else {
        let maps = model.map_series(taus, SignConvention::Fermionic)?;
        Ok(maps_apply(&maps, rho0))
    }
}

pub fn maps_apply(maps: &[SuperOperator], rho0: &DensityOperator) -> Vec<DensityOperator> {
    maps.iter()
        .map(|m| DensityOperator { matrix: m.apply(&rho0.matrix), modes: rho0.modes })
        .collect()
}

/// Occupation of the first system mode.
pub fn occupation(rho: &DensityOperator) -> f64 {
    rho.occupations()[0]
}

/// `⟨J⟩ = i⟨s₁† s₂ − s₂† s₁⟩`; the particle current between the dots is `g⟨J⟩`.
pub fn dot_current(rho: &DensityOperator) -> f64 {
    let k = rho.modes;
    let s1 = fock::annihilation(k, 0);
    let s2 = fock::annihilation(k, 1);
    let op = &(s1.adjoint() * &s2) - &(s2.adjoint() * &s1);
    (linalg::I * rho.expectation(&op)).re
}

pub fn trace_distances(states: &[DensityOperator], reference: &DensityOperator) -> Vec<f64> {
    states.iter().map(|s| trace_distance(s, reference)).collect()
}
