//! Quadratic (Gaussian) fermionic dynamics in the correlation-matrix
//! picture: Hamiltonian assembly for system + chains, propagation and
//! reduced density matrices of small mode subsets.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bath::{Branch, ThermofieldChains};
use crate::fock;
use crate::linalg::{self, CMat, RMat, ZERO};
use crate::state::DensityOperator;
use crate::{c64, Error, Result};

/// Largest subset for which [`reduced_density_matrix`] builds a Fock-space operator.
pub const MAX_RDM_MODES: usize = 8;
/// Eigenvalues of a correlation block are clamped to `[δ, 1 − δ]`.
pub const RDM_CLAMP: f64 = 1e-12;

/// Non-interacting dots on a line: on-site energies and a uniform hopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub hopping: f64,
    #[serde(default)]
    pub interaction: f64,
}

impl SystemSpec {
    pub fn single_dot(epsilon: f64) -> Self {
        Self { epsilon: vec![epsilon], hopping: 0.0, interaction: 0.0 }
    }

    pub fn double_dot(epsilon: f64, hopping: f64) -> Self {
        Self { epsilon: vec![epsilon, epsilon], hopping, interaction: 0.0 }
    }

    pub fn n_modes(&self) -> usize {
        self.epsilon.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.interaction != 0.0 {
            return Err(Error::UnsupportedInteraction(self.interaction));
        }
        if self.epsilon.is_empty() || self.epsilon.len() > 4 {
            return Err(Error::InvalidInput(format!("{} system modes", self.epsilon.len())));
        }
        if self.epsilon.iter().chain([&self.hopping]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite system parameter".into()));
        }
        Ok(())
    }

    /// Single-particle Hamiltonian `h_S`.
    pub fn hamiltonian(&self) -> RMat {
        let n = self.n_modes();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                self.epsilon[i]
            } else if i.abs_diff(j) == 1 {
                self.hopping
            } else {
                0.0
            }
        })
    }

    /// `H_S = Σ h_ij s_i† s_j` on the system Fock space.
    pub fn many_body_hamiltonian(&self) -> CMat {
        fock::quadratic(&linalg::to_complex(&self.hamiltonian()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lead {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeRole {
    Chain { lead: Lead, branch: Branch, site: usize },
    System(usize),
    Ancilla(usize),
}

/// Ordering of all single-particle modes: left chains interleaved filled,
/// empty by site; system modes; ancillas; right chains interleaved likewise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeLayout {
    pub n_system: usize,
    pub left_sites: usize,
    pub right_sites: usize,
}

impl ModeLayout {
    pub fn new(n_system: usize, left_sites: usize, right_sites: usize) -> Self {
        Self { n_system, left_sites, right_sites }
    }

    pub fn for_leads(n_system: usize, leads: &Leads) -> Self {
        Self::new(
            n_system,
            leads.left.n_sites(),
            leads.right.as_ref().map_or(0, |r| r.n_sites()),
        )
    }

    pub fn len(&self) -> usize {
        2 * self.left_sites + 2 * self.n_system + 2 * self.right_sites
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn system(&self, i: usize) -> usize {
        2 * self.left_sites + i
    }

    pub fn ancilla(&self, i: usize) -> usize {
        2 * self.left_sites + self.n_system + i
    }

    pub fn chain(&self, lead: Lead, branch: Branch, site: usize) -> usize {
        let b = match branch {
            Branch::Filled => 0,
            Branch::Empty => 1,
        };
        match lead {
            Lead::Left => 2 * site + b,
            Lead::Right => 2 * self.left_sites + 2 * self.n_system + 2 * site + b,
        }
    }

    pub fn system_modes(&self) -> Vec<usize> {
        (0..self.n_system).map(|i| self.system(i)).collect()
    }

    /// System modes followed by their ancillas.
    pub fn system_ancilla_modes(&self) -> Vec<usize> {
        (0..self.n_system)
            .map(|i| self.system(i))
            .chain((0..self.n_system).map(|i| self.ancilla(i)))
            .collect()
    }

    pub fn role(&self, index: usize) -> ModeRole {
        let l = 2 * self.left_sites;
        let n = self.n_system;
        let branch = |k: usize| if k % 2 == 0 { Branch::Filled } else { Branch::Empty };
        if index < l {
            ModeRole::Chain { lead: Lead::Left, branch: branch(index), site: index / 2 }
        } else if index < l + n {
            ModeRole::System(index - l)
        } else if index < l + 2 * n {
            ModeRole::Ancilla(index - l - n)
        } else {
            let k = index - l - 2 * n;
            ModeRole::Chain { lead: Lead::Right, branch: branch(k), site: k / 2 }
        }
    }
}

/// Chains of the left bath and, optionally, a right bath.
#[derive(Debug, Clone, PartialEq)]
pub struct Leads {
    pub left: ThermofieldChains,
    pub right: Option<ThermofieldChains>,
}

/// The left lead couples to the first system mode, the right lead to the last.
pub fn attachment(lead: Lead, n_system: usize) -> usize {
    match lead {
        Lead::Left => 0,
        Lead::Right => n_system - 1,
    }
}

/// Single-particle Hamiltonian of system, ancillas (decoupled) and chains.
pub fn assemble_hamiltonian(system: &SystemSpec, leads: &Leads, layout: &ModeLayout) -> Result<RMat> {
    system.validate()?;
    if layout.n_system != system.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "layout has {} system modes, system has {}",
            layout.n_system,
            system.n_modes()
        )));
    }
    let check = |name: &str, chains: Option<&ThermofieldChains>, sites: usize| -> Result<()> {
        let have = chains.map_or(0, |c| c.n_sites());
        let consistent = chains.map_or(true, |c| {
            [&c.filled, &c.empty]
                .iter()
                .all(|ch| ch.onsite.len() == sites && ch.hopping.len() + 1 == sites)
        });
        if have != sites || !consistent {
            return Err(Error::DimensionMismatch(format!(
                "{name} chains have {have} sites, layout expects {sites}"
            )));
        }
        Ok(())
    };
    check("left", Some(&leads.left), layout.left_sites)?;
    check("right", leads.right.as_ref(), layout.right_sites)?;

    let m = layout.len();
    let mut h = Mat::<f64>::zeros(m, m);
    let hs = system.hamiltonian();
    for i in 0..layout.n_system {
        for j in 0..layout.n_system {
            h[(layout.system(i), layout.system(j))] = hs[(i, j)];
        }
    }
    let mut add_lead = |lead: Lead, chains: &ThermofieldChains| {
        let s = layout.system(attachment(lead, layout.n_system));
        for (branch, sign) in [(Branch::Filled, 1.0), (Branch::Empty, -1.0)] {
            let chain = chains.branch(branch);
            let first = layout.chain(lead, branch, 0);
            h[(s, first)] += sign * chain.sys_coupling;
            h[(first, s)] += sign * chain.sys_coupling;
            for (n, &e) in chain.onsite.iter().enumerate() {
                let a = layout.chain(lead, branch, n);
                h[(a, a)] = e;
            }
            for (n, &t) in chain.hopping.iter().enumerate() {
                let a = layout.chain(lead, branch, n);
                let b = layout.chain(lead, branch, n + 1);
                h[(a, b)] = t;
                h[(b, a)] = t;
            }
        }
    };
    add_lead(Lead::Left, &leads.left);
    if let Some(right) = &leads.right {
        add_lead(Lead::Right, right);
    }
    Ok(h)
}

/// `C_ij = ⟨o_j† o_i⟩` at time `time`.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub entries: CMat,
    pub time: f64,
}

/// How the system (and ancilla) block of the initial correlation matrix is filled.
#[derive(Debug, Clone)]
pub enum SystemInit {
    /// Each system mode maximally entangled with its ancilla.
    Choi,
    /// Product state with the given system occupations.
    Occupations(Vec<f64>),
    /// Arbitrary system correlation block `⟨s_j† s_i⟩`.
    Correlations(CMat),
}

/// Filled chains occupied, empty chains vacant, system block from `init`.
pub fn initial_correlation_matrix(layout: &ModeLayout, init: &SystemInit) -> Result<CorrelationMatrix> {
    let m = layout.len();
    let mut c = Mat::<c64>::zeros(m, m);
    for k in 0..m {
        if let ModeRole::Chain { branch: Branch::Filled, .. } = layout.role(k) {
            c[(k, k)] = c64::new(1.0, 0.0);
        }
    }
    let n = layout.n_system;
    match init {
        SystemInit::Choi => {
            for i in 0..n {
                let (s, a) = (layout.system(i), layout.ancilla(i));
                for (p, q) in [(s, s), (s, a), (a, s), (a, a)] {
                    c[(p, q)] = c64::new(0.5, 0.0);
                }
            }
        }
        SystemInit::Occupations(occ) => {
            if occ.len() != n {
                return Err(Error::DimensionMismatch(format!("{} occupations for {n} modes", occ.len())));
            }
            for (i, &o) in occ.iter().enumerate() {
                c[(layout.system(i), layout.system(i))] = c64::new(o, 0.0);
            }
        }
        SystemInit::Correlations(block) => {
            if block.nrows() != n || block.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "correlation block {}x{} for {n} modes",
                    block.nrows(),
                    block.ncols()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    c[(layout.system(i), layout.system(j))] = block[(i, j)];
                }
            }
        }
    }
    Ok(CorrelationMatrix { entries: c, time: 0.0 })
}

/// Spectral decomposition `h = V E Vᵀ` of a real symmetric single-particle Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: Vec<f64>,
    vectors: RMat,
}

impl Propagator {
    pub fn new(h: &RMat) -> Self {
        let (energies, vectors) = linalg::real_symmetric_eigen(h);
        Self { energies, vectors }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `e^{−ihτ}`.
    pub fn evolution(&self, tau: f64) -> CMat {
        let m = self.dim();
        let phased = Mat::from_fn(m, m, |i, n| {
            self.vectors[(i, n)] * c64::from_polar(1.0, -self.energies[n] * tau)
        });
        let vt = linalg::to_complex(&self.vectors.transpose().to_owned());
        &phased * &vt
    }

    /// `C(τ) = e^{−ihτ} C(0) e^{ihτ}` on the full mode space.
    pub fn propagate(&self, c0: &CorrelationMatrix, tau: f64) -> CorrelationMatrix {
        let u = self.evolution(tau);
        let entries = &(&u * &c0.entries) * u.adjoint();
        CorrelationMatrix { entries, time: c0.time + tau }
    }

    /// Precomputes `Vᵀ C(0) V` so that the block of `C(τ)` on `targets`
    /// costs `O(M k)` per time after one matrix product per batch.
    pub fn block_evolution(&self, c0: &CorrelationMatrix, targets: &[usize]) -> BlockEvolution {
        let m = self.dim();
        let is_real = (0..m).all(|j| (0..m).all(|i| c0.entries[(i, j)].im == 0.0));
        let w = if is_real {
            let re = Mat::from_fn(m, m, |i, j| c0.entries[(i, j)].re);
            let t = self.vectors.transpose() * &re;
            Weights::Real(&t * &self.vectors)
        } else {
            let v = linalg::to_complex(&self.vectors);
            let t = v.transpose() * &c0.entries;
            Weights::Complex(&t * &v)
        };
        let rows = Mat::from_fn(targets.len(), m, |t, n| self.vectors[(targets[t], n)]);
        BlockEvolution { energies: self.energies.clone(), rows, weights: w, t0: c0.time }
    }
}

#[derive(Debug, Clone)]
enum Weights {
    Real(RMat),
    Complex(CMat),
}

/// Block of the correlation matrix on a fixed set of modes as a function of time.
#[derive(Debug, Clone)]
pub struct BlockEvolution {
    energies: Vec<f64>,
    rows: RMat,
    weights: Weights,
    t0: f64,
}

impl BlockEvolution {
    const BATCH: usize = 128;

    pub fn at(&self, tau: f64) -> CMat {
        self.series(&[tau]).pop().unwrap()
    }

    /// Blocks at times `t0 + τ` for each `τ` in `taus`.
    pub fn series(&self, taus: &[f64]) -> Vec<CMat> {
        let k = self.rows.nrows();
        let m = self.energies.len();
        let mut out = Vec::with_capacity(taus.len());
        for chunk in taus.chunks(Self::BATCH) {
            let cols = k * chunk.len();
            // z[n, b k + t] = V_tn e^{−i E_n τ_b}
            let mut z_re = Mat::<f64>::zeros(m, cols);
            let mut z_im = Mat::<f64>::zeros(m, cols);
            for (b, &tau) in chunk.iter().enumerate() {
                for n in 0..m {
                    let (s, c) = (-self.energies[n] * tau).sin_cos();
                    for t in 0..k {
                        let v = self.rows[(t, n)];
                        z_re[(n, b * k + t)] = v * c;
                        z_im[(n, b * k + t)] = v * s;
                    }
                }
            }
            // y = W conj(z)
            let (y_re, y_im) = match &self.weights {
                Weights::Real(w) => {
                    let yr = w * &z_re;
                    let yi = w * &z_im;
                    (yr, Mat::from_fn(m, cols, |i, j| -yi[(i, j)]))
                }
                Weights::Complex(w) => {
                    let wr = Mat::from_fn(m, m, |i, j| w[(i, j)].re);
                    let wi = Mat::from_fn(m, m, |i, j| w[(i, j)].im);
                    let a = &wr * &z_re;
                    let b = &wi * &z_im;
                    let c = &wi * &z_re;
                    let d = &wr * &z_im;
                    (&a + &b, &c - &d)
                }
            };
            for b in 0..chunk.len() {
                let block = Mat::from_fn(k, k, |t, u| {
                    let (mut re, mut im) = (0.0, 0.0);
                    let (jt, ju) = (b * k + t, b * k + u);
                    for n in 0..m {
                        let (ar, ai) = (z_re[(n, jt)], z_im[(n, jt)]);
                        let (br, bi) = (y_re[(n, ju)], y_im[(n, ju)]);
                        re += ar * br - ai * bi;
                        im += ar * bi + ai * br;
                    }
                    c64::new(re, im)
                });
                out.push(block);
            }
        }
        out
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }
}

pub fn population(c: &CorrelationMatrix, mode: usize) -> f64 {
    c.entries[(mode, mode)].re
}

/// `i⟨o_i† o_j − o_j† o_i⟩ = i(C_ji − C_ij)`; equals `dn_j/dt / h_ij` for real hopping.
pub fn current(c: &CMat, i: usize, j: usize) -> f64 {
    (crate::linalg::I * (c[(j, i)] - c[(i, j)])).re
}

/// Fock-space density operator of the Gaussian state restricted to `modes`.
pub fn reduced_density_matrix(c: &CorrelationMatrix, modes: &[usize]) -> Result<DensityOperator> {
    let block = Mat::from_fn(modes.len(), modes.len(), |i, j| c.entries[(modes[i], modes[j])]);
    gaussian_state(&block)
}

/// `ρ = det(1 − C) exp(Σ K_ij c_i† c_j)` with `K = log(C (1 − C)⁻¹)`.
pub fn gaussian_state(block: &CMat) -> Result<DensityOperator> {
    let k = block.nrows();
    if k > MAX_RDM_MODES {
        return Err(Error::ModeCountTooLarge { modes: k, limit: MAX_RDM_MODES });
    }
    let (occ, w) = linalg::hermitian_eigen(block);
    let occ: Vec<f64> = occ.iter().map(|n| n.clamp(RDM_CLAMP, 1.0 - RDM_CLAMP)).collect();
    let log_det: f64 = occ.iter().map(|n| (1.0 - n).ln()).sum();
    let kappa: Vec<c64> = occ.iter().map(|n| c64::new((n / (1.0 - n)).ln(), 0.0)).collect();
    let kmat = &(&w * linalg::diag(&kappa)) * w.adjoint();
    let q = fock::quadratic(&kmat);
    let (vals, vecs) = linalg::hermitian_eigen(&q);
    let d = vals.len();
    let weights: Vec<f64> = vals.iter().map(|v| (v + log_det).exp()).collect();
    let scaled = Mat::from_fn(d, d, |i, a| vecs[(i, a)] * weights[a]);
    let rho = &scaled * vecs.adjoint();
    DensityOperator::new(rho)
}

/// Correlation block of an arbitrary state, and whether the state is Gaussian
/// (reproduced by its own correlations to within `tol`).
pub fn gaussian_part(rho: &DensityOperator, tol: f64) -> (CMat, bool) {
    let c = rho.correlations();
    let is_gaussian = match gaussian_state(&c) {
        Ok(g) => linalg::max_abs(&(&g.matrix - &rho.matrix)) < tol,
        Err(_) => false,
    };
    (c, is_gaussian)
}

pub fn zero_block(k: usize) -> CMat {
    Mat::from_fn(k, k, |_, _| ZERO)
}
