//! Fermionic baths: spectral densities, thermofield splitting and the
//! mapping of a weight function onto a semi-infinite tight-binding chain.

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// A non-negative weight on a finite interval.
pub trait WeightFunction: Sync {
    fn eval(&self, omega: f64) -> f64;
    fn support(&self) -> (f64, f64);
    /// Interior points where the weight varies sharply.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Semi-elliptic density `J(ω) = (2Γ/π²) √(1 − (ω/D)²)` on `[−D, D]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub gamma: f64,
    pub bandwidth: f64,
}

impl SpectralDensity {
    pub fn new(gamma: f64, bandwidth: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("coupling gamma = {gamma}")));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth = {bandwidth}")));
        }
        Ok(Self { gamma, bandwidth })
    }

    /// Total weight `∫ J dω = Γ D / π`.
    pub fn total_weight(&self) -> f64 {
        self.gamma * self.bandwidth / PI
    }
}

impl WeightFunction for SpectralDensity {
    fn eval(&self, omega: f64) -> f64 {
        let x = omega / self.bandwidth;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        2.0 * self.gamma / (PI * PI) * (1.0 - x * x).sqrt()
    }

    fn support(&self) -> (f64, f64) {
        (-self.bandwidth, self.bandwidth)
    }
}

/// Fermi-Dirac occupation. `beta` may be `f64::INFINITY`.
pub fn fermi(beta: f64, mu: f64, omega: f64) -> f64 {
    logistic(-beta_times(beta, omega - mu))
}

/// `1 − f(ω)`, evaluated without cancellation.
pub fn fermi_complement(beta: f64, mu: f64, omega: f64) -> f64 {
    logistic(beta_times(beta, omega - mu))
}

fn beta_times(beta: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        beta * x
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Filled,
    Empty,
}

/// One fermionic reservoir at inverse temperature `beta` and chemical potential `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub density: SpectralDensity,
    pub beta: f64,
    pub mu: f64,
    /// Number of chain sites beyond the first one.
    pub n_modes: usize,
}

impl BathSpec {
    pub fn new(density: SpectralDensity, beta: f64, mu: f64, n_modes: usize) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidInput(format!("beta = {beta}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidInput(format!("mu = {mu}")));
        }
        Ok(Self { density, beta, mu, n_modes })
    }

    pub fn fermi(&self, omega: f64) -> f64 {
        fermi(self.beta, self.mu, omega)
    }

    pub fn branch(&self, branch: Branch) -> ThermofieldBranch {
        ThermofieldBranch { density: self.density, beta: self.beta, mu: self.mu, branch }
    }

    /// `(J_f, J_e) = (f J, (1 − f) J)`.
    pub fn thermofield_split(&self) -> (ThermofieldBranch, ThermofieldBranch) {
        (self.branch(Branch::Filled), self.branch(Branch::Empty))
    }

    /// Points where the Fermi function varies quickly, inside the band.
    pub fn fermi_breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.density.support();
        let mut pts = vec![self.mu];
        if self.beta.is_finite() && self.beta > 0.0 {
            let w = 5.0 / self.beta;
            pts.push(self.mu - w);
            pts.push(self.mu + w);
        }
        pts.retain(|&p| p > lo && p < hi);
        pts
    }
}

/// Filled (`f J`) or empty (`(1 − f) J`) component of a thermal bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermofieldBranch {
    pub density: SpectralDensity,
    pub beta: f64,
    pub mu: f64,
    pub branch: Branch,
}

impl WeightFunction for ThermofieldBranch {
    fn eval(&self, omega: f64) -> f64 {
        let occ = match self.branch {
            Branch::Filled => fermi(self.beta, self.mu, omega),
            Branch::Empty => fermi_complement(self.beta, self.mu, omega),
        };
        occ * self.density.eval(omega)
    }

    fn support(&self) -> (f64, f64) {
        self.density.support()
    }

    fn breakpoints(&self) -> Vec<f64> {
        BathSpec { density: self.density, beta: self.beta, mu: self.mu, n_modes: 0 }.fermi_breakpoints()
    }
}

/// Quadrature rule on a finite band built from Gauss-Legendre panels in the
/// angle `θ`, with `ω = c − h cos θ`. The substitution absorbs the square-root
/// band edges that limit plain Gauss-Legendre in `ω`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn band(support: (f64, f64), breakpoints: &[f64], n_points: usize) -> Result<Self> {
        let (lo, hi) = support;
        if !(hi > lo) {
            return Err(Error::InvalidInput(format!("empty support [{lo}, {hi}]")));
        }
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .filter(|&&b| b > lo && b < hi)
            .map(|&b| ((c - b) / h).clamp(-1.0, 1.0).acos())
            .collect();
        cuts.push(0.0);
        cuts.push(PI);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let panels: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();

        let min_per_panel = 4;
        if n_points < min_per_panel * panels.len() {
            return Err(Error::InvalidInput(format!("{n_points} quadrature points is too few")));
        }
        let mut counts: Vec<usize> = panels
            .iter()
            .map(|(a, b)| ((n_points as f64) * (b - a) / PI).floor() as usize)
            .map(|k| k.max(min_per_panel))
            .collect();
        let assigned: usize = counts.iter().sum();
        let largest = (0..panels.len())
            .max_by(|&i, &j| counts[i].cmp(&counts[j]))
            .unwrap();
        counts[largest] = (counts[largest] as isize + n_points as isize - assigned as isize)
            .max(min_per_panel as isize) as usize;

        let mut nodes = Vec::with_capacity(n_points);
        let mut weights = Vec::with_capacity(n_points);
        for (&(a, b), &n) in panels.iter().zip(&counts) {
            let rule = GaussLegendre::new(n)
                .map_err(|e| Error::InvalidInput(format!("Gauss-Legendre rule of degree {n}: {e}")))?;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in rule.into_iter() {
                let theta = mid + half * x;
                nodes.push(c - h * theta.cos());
                weights.push(w * half * h * theta.sin());
            }
        }
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&i, &j| nodes[i].partial_cmp(&nodes[j]).unwrap());
        Ok(Self {
            nodes: order.iter().map(|&i| nodes[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
        })
    }

    pub fn for_weight(weight: &dyn WeightFunction, n_points: usize) -> Result<Self> {
        Self::band(weight.support(), &weight.breakpoints(), n_points)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `PV ∫ w(ω) / (ω − x) dω` by singularity subtraction with the analytic
/// logarithm for the subtracted constant.
pub fn principal_value(weight: &dyn WeightFunction, grid: &QuadratureGrid, x: f64) -> f64 {
    let (lo, hi) = weight.support();
    if x <= lo || x >= hi {
        return grid.integrate(|w| weight.eval(w) / (w - x));
    }
    let wx = weight.eval(x);
    let smooth = grid.integrate(|w| {
        let d = w - x;
        if d.abs() < 1e-13 {
            0.0
        } else {
            (weight.eval(w) - wx) / d
        }
    });
    smooth + wx * ((hi - x) / (x - lo)).ln()
}

/// Tight-binding chain equivalent to a weight function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCoefficients {
    /// On-site energies of sites `0..=n_modes`.
    pub onsite: Vec<f64>,
    /// Nearest-neighbour hoppings between consecutive sites.
    pub hopping: Vec<f64>,
    /// Coupling of the first site to the system, `√∫ w dω`.
    pub sys_coupling: f64,
}

impl ChainCoefficients {
    pub fn n_sites(&self) -> usize {
        self.onsite.len()
    }

    /// A chain that does not couple to the system at all.
    pub fn decoupled(n_modes: usize, bandwidth: f64) -> Self {
        Self {
            onsite: vec![0.0; n_modes + 1],
            hopping: vec![0.5 * bandwidth; n_modes],
            sys_coupling: 0.0,
        }
    }

    /// Multiply the first-site coupling strength `∫ w` by `factor`.
    pub fn rescale_first_site(&mut self, factor: f64) {
        self.sys_coupling *= factor.max(0.0).sqrt();
    }
}

/// Map `weight` onto a chain of `n_modes + 1` sites with a discretised
/// Stieltjes procedure (Lanczos with full reorthogonalisation on a
/// `quadrature_points`-node rule).
pub fn chain_coefficients(
    weight: &dyn WeightFunction,
    n_modes: usize,
    quadrature_points: usize,
) -> Result<ChainCoefficients> {
    let grid = QuadratureGrid::for_weight(weight, quadrature_points)?;
    chain_from_grid(weight, &grid, n_modes)
}

pub fn chain_from_grid(
    weight: &dyn WeightFunction,
    grid: &QuadratureGrid,
    n_modes: usize,
) -> Result<ChainCoefficients> {
    let x = &grid.nodes;
    let mass: Vec<f64> = x
        .iter()
        .zip(&grid.weights)
        .map(|(&xi, &qi)| qi * weight.eval(xi).max(0.0))
        .collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NonPositiveWeight);
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let breakdown_tol = 1e-12 * scale;

    let n = x.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_modes + 1);
    let mut v: Vec<f64> = mass.iter().map(|m| (m / total).sqrt()).collect();
    let mut onsite = Vec::with_capacity(n_modes + 1);
    let mut hopping = Vec::with_capacity(n_modes);
    let mut prev_b = 0.0;
    for step in 0..=n_modes {
        let mut w: Vec<f64> = (0..n).map(|k| x[k] * v[k]).collect();
        let alpha: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        onsite.push(alpha);
        if step == n_modes {
            break;
        }
        for k in 0..n {
            w[k] -= alpha * v[k];
        }
        if let Some(prev) = basis.last() {
            for k in 0..n {
                w[k] -= prev_b * prev[k];
            }
        }
        basis.push(v.clone());
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for k in 0..n {
                    w[k] -= c * q[k];
                }
            }
        }
        let b = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(b > breakdown_tol) {
            return Err(Error::RecurrenceBreakdown { step: step + 1, residual: b });
        }
        hopping.push(b);
        prev_b = b;
        v = w.into_iter().map(|a| a / b).collect();
    }
    Ok(ChainCoefficients { onsite, hopping, sys_coupling: total.sqrt() })
}

/// Filled and empty chains of one bath. A branch without weight (for
/// example the empty branch at zero temperature below the band) becomes a
/// decoupled chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermofieldChains {
    pub filled: ChainCoefficients,
    pub empty: ChainCoefficients,
}

impl ThermofieldChains {
    pub fn from_bath(bath: &BathSpec, quadrature_points: usize) -> Result<Self> {
        let build = |branch: Branch| {
            let w = bath.branch(branch);
            match chain_coefficients(&w, bath.n_modes, quadrature_points) {
                Err(Error::NonPositiveWeight) => {
                    Ok(ChainCoefficients::decoupled(bath.n_modes, bath.density.bandwidth))
                }
                other => other,
            }
        };
        Ok(Self { filled: build(Branch::Filled)?, empty: build(Branch::Empty)? })
    }

    pub fn n_sites(&self) -> usize {
        self.filled.n_sites()
    }

    pub fn branch(&self, branch: Branch) -> &ChainCoefficients {
        match branch {
            Branch::Filled => &self.filled,
            Branch::Empty => &self.empty,
        }
    }

    pub fn rescale_first_site(&mut self, factor: f64) {
        self.filled.rescale_first_site(factor);
        self.empty.rescale_first_site(factor);
    }
}
