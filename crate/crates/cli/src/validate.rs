//! Invariant and oracle checks on the configured model, plus two deliberate
//! fault fixtures that must be caught.

use nmpemba::bath::{chain_coefficients, BathSpec, Branch, SpectralDensity, ThermofieldChains};
use nmpemba::gaussian::{
    assemble_hamiltonian, initial_correlation_matrix, reduced_density_matrix, Leads, ModeLayout, ModeRole,
    Propagator, SystemInit, SystemSpec,
};
use nmpemba::linalg::{self, max_abs};
use nmpemba::negf::NegfModel;
use nmpemba::oracle::ManyBodyOracle;
use nmpemba::pipeline::{dot_current, uniform_grid, Analysis, Model, ModelSpec};
use nmpemba::redfield::RedfieldModel;
use nmpemba::superop::SuperOperator;
use nmpemba::tomography::{reference_rate, SignConvention};
use nmpemba::Error;
use serde::Serialize;

use crate::config::Loaded;
use crate::failure::Failure;
use crate::output::Writer;
use crate::run::analyse;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    /// Measured quantity compared against `threshold`, where one applies.
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn below(name: &'static str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name, pass: value < threshold, value: Some(value), threshold: Some(threshold), detail: detail.into() }
    }

    fn above(name: &'static str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name, pass: value >= threshold, value: Some(value), threshold: Some(threshold), detail: detail.into() }
    }

    fn flag(name: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name, pass, value: None, threshold: None, detail: detail.into() }
    }

    fn error(name: &'static str, e: impl std::fmt::Display) -> Self {
        Self::flag(name, false, e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub const CP_TOLERANCE: f64 = 1e-7;
pub const TP_TOLERANCE: f64 = 1e-8;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;
pub const RATE_TOLERANCE: f64 = 0.2;
pub const NEGF_TOLERANCE: f64 = 1e-3;
pub const BRUTE_FORCE_TOLERANCE: f64 = 1e-9;
pub const FINITE_SIZE_MODES: usize = 20;

fn map_checks(a: &Analysis) -> Vec<Check> {
    let min_choi = a.maps.iter().map(|m| m.choi_min_eigenvalue()).fold(f64::INFINITY, f64::min);
    let tp = a.maps.iter().map(|m| m.trace_preservation_residual()).fold(0.0, f64::max);
    let identity = a.maps[0].distance(&SuperOperator::identity(a.maps[0].dim));
    let n = a.maps.len();
    vec![
        Check::above("complete_positivity", min_choi, -CP_TOLERANCE, format!("smallest Choi eigenvalue over {n} maps")),
        Check::below("trace_preservation", tp, TP_TOLERANCE, format!("largest residual over {n} maps")),
        Check::below("initial_map_identity", identity, IDENTITY_TOLERANCE, "max |Λ(0) − 1|"),
    ]
}

/// Total particle number of the full chain model is a constant of motion.
fn conservation(model: &Model, tau_max: f64) -> Result<Check, Error> {
    let c0 = initial_correlation_matrix(&model.layout, &SystemInit::Choi)?;
    let n0 = linalg::trace(&c0.entries).re;
    let worst = (0..=10)
        .map(|k| {
            let c = model.propagator().propagate(&c0, tau_max * k as f64 / 10.0);
            (linalg::trace(&c.entries).re - n0).abs()
        })
        .fold(0.0, f64::max);
    Ok(Check::below("particle_conservation", worst, CONSERVATION_TOLERANCE, format!("|Tr C(τ) − Tr C(0)|, N = {n0}")))
}

fn redfield_rate(spec: &ModelSpec, a: &Analysis) -> Result<Check, Error> {
    let rf = RedfieldModel::new(&spec.system, &spec.baths, nmpemba::redfield::DEFAULT_QUADRATURE_POINTS)?;
    let oracle = reference_rate(&rf.generator(f64::INFINITY));
    let exact = reference_rate(&a.converged_generator);
    let rel = (exact - oracle).abs() / oracle;
    Ok(Check::below(
        "redfield_rate",
        rel,
        RATE_TOLERANCE,
        format!("slowest rate {exact:.6e} from tomography vs {oracle:.6e} from Redfield (relative)"),
    ))
}

fn negf_checks(spec: &ModelSpec, a: &Analysis) -> Result<Vec<Check>, Error> {
    let negf = NegfModel::new(&spec.system, &spec.baths)?;
    let oracle = negf.steady_occupation();
    let dynamic = a.steady_state.occupations();
    let dev = oracle.iter().zip(&dynamic).map(|(o, d)| (o - d).abs()).fold(0.0, f64::max);
    let mut checks = vec![Check::below(
        "negf_occupation",
        dev,
        NEGF_TOLERANCE,
        format!("dynamics {dynamic:.6?} vs Landauer {oracle:.6?}"),
    )];
    if spec.baths.len() == 2 && spec.system.n_modes() == 2 {
        let (particle, _) = negf.steady_currents();
        let dynamic = spec.system.hopping * dot_current(&a.steady_state);
        checks.push(Check::below(
            "negf_current",
            (particle - dynamic).abs(),
            NEGF_TOLERANCE * spec.system.hopping.abs().max(f64::MIN_POSITIVE),
            format!("g<J> {dynamic:.6e} vs Landauer {particle:.6e}"),
        ));
    }
    Ok(checks)
}

/// Gaussian propagation against exact many-body evolution on six modes.
fn brute_force() -> Result<Check, Error> {
    let bath = BathSpec::new(SpectralDensity::new(0.2, 1.0)?, 2.0, 0.1, 1)?;
    let build = |b: Branch| chain_coefficients(&bath.branch(b), 1, 400);
    let leads = Leads {
        left: ThermofieldChains { filled: build(Branch::Filled)?, empty: build(Branch::Empty)? },
        right: None,
    };
    let system = SystemSpec::single_dot(0.15);
    let layout = ModeLayout::for_leads(1, &leads);
    let h = assemble_hamiltonian(&system, &leads, &layout)?;
    let prop = Propagator::new(&h);
    let c0 = initial_correlation_matrix(&layout, &SystemInit::Choi)?;
    let oracle = ManyBodyOracle::new(&h)?;
    let filled: Vec<usize> = (0..layout.len())
        .filter(|&k| matches!(layout.role(k), ModeRole::Chain { branch: Branch::Filled, .. }))
        .collect();
    let psi0 = oracle.initial_state(&filled, &[(layout.system(0), layout.ancilla(0))]);
    let sa = layout.system_ancilla_modes();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let tau = 0.7 * k as f64;
        let gaussian = reduced_density_matrix(&prop.propagate(&c0, tau), &sa)?;
        let exact = oracle.reduced(&oracle.evolve(&psi0, tau), &sa)?;
        worst = worst.max(max_abs(&(&gaussian.matrix - &exact.matrix)));
    }
    Ok(Check::below("brute_force", worst, BRUTE_FORCE_TOLERANCE, format!("{} modes, 50 times", layout.len())))
}

/// A wrong string sign in the map reconstruction must surface as a CP violation.
fn corrupted_signs(system: &SystemSpec) -> Check {
    let name = "fault_corrupted_signs";
    let bath = |mu: f64| BathSpec::new(SpectralDensity::new(0.1, 1.0).unwrap(), 5.0, mu, 3).unwrap();
    let baths = if system.n_modes() == 1 { vec![bath(0.2)] } else { vec![bath(0.2), bath(-0.2)] };
    let spec = ModelSpec { system: system.clone(), baths, quadrature_points: 400 };
    let result = Model::build(&spec).and_then(|m| m.map_series(&uniform_grid(1.0, 5.0), SignConvention::Corrupted));
    match result {
        Err(Error::CpViolation { tau, min_eigenvalue }) => {
            Check::flag(name, true, format!("CpViolation at τ = {tau}, eigenvalue {min_eigenvalue:.3e}"))
        }
        Err(e) => Check::flag(name, false, format!("unexpected error {e}")),
        Ok(_) => Check::flag(name, false, "corrupted maps passed the CP check"),
    }
}

/// Chains too short for the window reflect excitations back onto the dot.
fn finite_size(loaded: &Loaded) -> Check {
    let name = "fault_finite_size";
    let cfg = &loaded.config;
    let result = cfg.model_spec_with(&cfg.baths, FINITE_SIZE_MODES).map_err(|e| e.to_string()).and_then(|spec| {
        match analyse(cfg, &spec) {
            Ok(_) => Ok(None),
            Err(Failure::Numerical(Error::NotConverged(m))) => Ok(Some(m)),
            Err(e) => Err(e.to_string()),
        }
    });
    match result {
        Ok(Some(m)) => Check::flag(name, true, format!("n_modes = {FINITE_SIZE_MODES}: NotConverged ({m})")),
        Ok(None) => Check::flag(name, false, format!("n_modes = {FINITE_SIZE_MODES} converged")),
        Err(e) => Check::flag(name, false, format!("unexpected error {e}")),
    }
}

pub fn validate(loaded: &Loaded) -> Result<(ValidationReport, String), Failure> {
    let cfg = &loaded.config;
    let spec = cfg.model_spec()?;
    let mut checks = Vec::new();
    match analyse(cfg, &spec) {
        Ok((model, a)) => {
            checks.push(Check::flag("memory_time", true, format!("τ_L = {:.2}", a.memory.tau_l)));
            checks.extend(map_checks(&a));
            checks.push(conservation(&model, cfg.run.tau_max).unwrap_or_else(|e| Check::error("particle_conservation", e)));
            checks.push(redfield_rate(&spec, &a).unwrap_or_else(|e| Check::error("redfield_rate", e)));
            match negf_checks(&spec, &a) {
                Ok(c) => checks.extend(c),
                Err(e) => checks.push(Check::error("negf_occupation", e)),
            }
        }
        Err(e) => checks.push(Check::error("memory_time", e)),
    }
    checks.push(brute_force().unwrap_or_else(|e| Check::error("brute_force", e)));
    checks.push(corrupted_signs(&spec.system));
    checks.push(finite_size(loaded));

    let report = ValidationReport { pass: checks.iter().all(|c| c.pass), checks };
    let out = Writer::new(&cfg.output, &loaded.sha256)?;
    out.json("validate_report.json", &report)?;
    let lines: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            let value = match (c.value, c.threshold) {
                (Some(v), Some(t)) => format!(" {v:.3e} (limit {t:.1e})"),
                _ => String::new(),
            };
            format!("{} {}{value}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)
        })
        .collect();
    Ok((report, lines.join("\n")))
}
