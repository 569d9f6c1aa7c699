//! Steady-state Green's-function (Landauer-Büttiker) results for the
//! non-interacting dots: self-energies, transmission, currents and
//! occupations.

use faer::Mat;
use std::f64::consts::PI;

use crate::bath::{principal_value, BathSpec, QuadratureGrid, SpectralDensity, WeightFunction};
use crate::gaussian::{attachment, Lead, SystemSpec};
use crate::linalg::{self, CMat};
use crate::{c64, Error, Result};

/// Absolute tolerance of the adaptive frequency integrals.
pub const INTEGRATION_TOLERANCE: f64 = 1e-12;

/// Retarded self-energy `Σ(ω) = PV∫ J(ω')/(ω − ω') dω' − iπJ(ω)`, closed form
/// for the semi-elliptic band.
pub fn self_energy(sd: &SpectralDensity, omega: f64) -> c64 {
    let z = omega / sd.bandwidth;
    let pref = 2.0 * sd.gamma / PI;
    if z.abs() < 1.0 {
        c64::new(pref * z, -pref * (1.0 - z * z).sqrt())
    } else {
        c64::new(pref * (z - z.signum() * (z * z - 1.0).sqrt()), 0.0)
    }
}

/// Same quantity with the real part from singularity-subtraction quadrature.
pub fn self_energy_quadrature(sd: &SpectralDensity, omega: f64, grid: &QuadratureGrid) -> c64 {
    c64::new(-principal_value(sd, grid, omega), -PI * sd.eval(omega))
}

/// Integrate `f` over `[lo, hi]`, split at `cuts`, with double-exponential quadrature.
fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cuts: &[f64]) -> f64 {
    let mut pts: Vec<f64> = cuts.iter().cloned().filter(|&c| c > lo && c < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts.windows(2)
        .map(|w| quadrature::integrate(&f, w[0], w[1], INTEGRATION_TOLERANCE).integral)
        .sum()
}

/// Dots attached to one (left) or two (left, right) reservoirs.
pub struct NegfModel {
    h: CMat,
    leads: Vec<(BathSpec, usize)>,
}

impl NegfModel {
    pub fn new(system: &SystemSpec, baths: &[BathSpec]) -> Result<Self> {
        system.validate()?;
        if baths.is_empty() || baths.len() > 2 {
            return Err(Error::InvalidInput(format!("{} baths", baths.len())));
        }
        let n = system.n_modes();
        let leads = baths
            .iter()
            .enumerate()
            .map(|(k, b)| (*b, attachment(if k == 0 { Lead::Left } else { Lead::Right }, n)))
            .collect();
        Ok(Self { h: linalg::to_complex(&system.hamiltonian()), leads })
    }

    pub fn n_modes(&self) -> usize {
        self.h.nrows()
    }

    /// Retarded Green's function `(ω − h_S − Σ_α Σ_α(ω) P_α)⁻¹`.
    pub fn green(&self, omega: f64) -> CMat {
        let n = self.n_modes();
        let mut m = Mat::from_fn(n, n, |i, j| {
            let diag = if i == j { c64::new(omega, 0.0) } else { c64::new(0.0, 0.0) };
            diag - self.h[(i, j)]
        });
        for (bath, site) in &self.leads {
            m[(*site, *site)] -= self_energy(&bath.density, omega);
        }
        linalg::inverse(&m)
    }

    /// `τ(ω) = 4π² J_L J_R |G_{1N}|²`; zero with a single lead.
    pub fn transmission(&self, omega: f64) -> f64 {
        if self.leads.len() < 2 {
            return 0.0;
        }
        let (l, sl) = &self.leads[0];
        let (r, sr) = &self.leads[1];
        let g = self.green(omega)[(*sl, *sr)];
        4.0 * PI * PI * l.density.eval(omega) * r.density.eval(omega) * g.norm_sqr()
    }

    fn band(&self) -> (f64, f64) {
        let d = self.leads.iter().map(|(b, _)| b.density.bandwidth).fold(0.0, f64::max);
        (-d, d)
    }

    fn cuts(&self) -> Vec<f64> {
        let mut cuts: Vec<f64> = linalg::hermitian_eigenvalues(&self.h);
        for (b, _) in &self.leads {
            cuts.extend(b.fermi_breakpoints());
        }
        cuts
    }

    /// Particle and energy currents from the left into the right reservoir.
    pub fn steady_currents(&self) -> (f64, f64) {
        if self.leads.len() < 2 {
            return (0.0, 0.0);
        }
        let (l, r) = (self.leads[0].0, self.leads[1].0);
        let (lo, hi) = self.band();
        let cuts = self.cuts();
        let window = |w: f64| l.fermi(w) - r.fermi(w);
        let particle = integrate(|w| self.transmission(w) * window(w), lo, hi, &cuts) / (2.0 * PI);
        let energy = integrate(|w| w * self.transmission(w) * window(w), lo, hi, &cuts) / (2.0 * PI);
        (particle, energy)
    }

    /// `n_i = ∫ dω Σ_α J_α |G_{i,α}|² f_α`.
    pub fn steady_occupation(&self) -> Vec<f64> {
        let (lo, hi) = self.band();
        let cuts = self.cuts();
        (0..self.n_modes())
            .map(|i| {
                integrate(
                    |w| {
                        let g = self.green(w);
                        self.leads
                            .iter()
                            .map(|(b, s)| b.density.eval(w) * g[(i, *s)].norm_sqr() * b.fermi(w))
                            .sum()
                    },
                    lo,
                    hi,
                    &cuts,
                )
            })
            .collect()
    }

    /// `∫ dω Σ_α J_α |G_{i,α}|²`, the in-band spectral weight of mode `i`.
    pub fn spectral_weight(&self, i: usize) -> f64 {
        let (lo, hi) = self.band();
        integrate(
            |w| {
                let g = self.green(w);
                self.leads.iter().map(|(b, s)| b.density.eval(w) * g[(i, *s)].norm_sqr()).sum()
            },
            lo,
            hi,
            &self.cuts(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd(gamma: f64) -> SpectralDensity {
        SpectralDensity::new(gamma, 1.0).unwrap()
    }

    fn bath(gamma: f64, beta: f64, mu: f64) -> BathSpec {
        BathSpec::new(sd(gamma), beta, mu, 0).unwrap()
    }

    #[test]
    fn self_energy_at_band_centre() {
        let s = self_energy(&sd(0.01), 0.0);
        assert_eq!(s.re, 0.0);
        assert!((s.im + 2.0 * 0.01 / PI).abs() < 1e-16);
    }

    #[test]
    fn closed_form_matches_subtraction_quadrature() {
        let j = sd(0.02);
        let grid = QuadratureGrid::band((-1.0, 1.0), &[], 4000).unwrap();
        for w in [-0.9, -0.5, 0.5, 0.9, 1.3] {
            let a = self_energy(&j, w);
            let b = self_energy_quadrature(&j, w, &grid);
            assert!((a - b).norm() < 1e-8, "{w}: {a} vs {b}");
        }
    }

    #[test]
    fn transmission_bounds() {
        let sys = SystemSpec::double_dot(0.0, 0.1);
        let m = NegfModel::new(&sys, &[bath(0.01, 10.0, 0.1), bath(0.01, 10.0, -0.1)]).unwrap();
        let mut peak = 0.0f64;
        for k in 0..4001 {
            let w = -1.0 + 2.0 * k as f64 / 4000.0;
            let t = m.transmission(w);
            assert!((-1e-15..=1.0 + 1e-12).contains(&t));
            peak = peak.max(t);
        }
        assert!(peak > 0.9);
        let single = NegfModel::new(&sys, &[bath(0.01, 10.0, 0.1), bath(0.0, 10.0, -0.1)]).unwrap();
        assert_eq!(single.transmission(0.1), 0.0);
    }

    #[test]
    fn currents_vanish_at_equilibrium_and_flip_with_bias() {
        let sys = SystemSpec::double_dot(0.0, 0.1);
        let eq = NegfModel::new(&sys, &[bath(0.01, 10.0, 0.0), bath(0.01, 10.0, 0.0)]).unwrap();
        assert!(eq.steady_currents().0.abs() < 1e-15);
        let fwd = NegfModel::new(&sys, &[bath(0.01, 10.0, 0.1), bath(0.01, 10.0, -0.1)]).unwrap();
        let rev = NegfModel::new(&sys, &[bath(0.01, 10.0, -0.1), bath(0.01, 10.0, 0.1)]).unwrap();
        let (a, b) = (fwd.steady_currents().0, rev.steady_currents().0);
        assert!(a > 0.0);
        assert!((a + b).abs() < 1e-12 * a.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn occupation_limits() {
        let sys = SystemSpec::single_dot(0.0);
        let hot = NegfModel::new(&sys, &[bath(0.01, 0.0, 0.0)]).unwrap();
        assert!((hot.steady_occupation()[0] - 0.5).abs() < 1e-9);
        let full = NegfModel::new(&sys, &[bath(0.01, 10.0, 5.0)]).unwrap();
        assert!((full.steady_occupation()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn spectral_sum_rule() {
        let m = NegfModel::new(&SystemSpec::double_dot(0.0, 0.1), &[bath(0.01, 10.0, 0.1), bath(0.01, 10.0, -0.1)])
            .unwrap();
        for i in 0..2 {
            assert!((m.spectral_weight(i) - 1.0).abs() < 1e-6);
        }
    }
}
