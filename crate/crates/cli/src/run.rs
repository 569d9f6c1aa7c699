//! Subcommands that produce data files: single-dot, double-dot, sweep, quench.

use nmpemba::mpemba::{fast_state, MpembaKind, MpembaReport};
use nmpemba::negf::NegfModel;
use nmpemba::pipeline::{
    analyze, dot_current, maps_apply, occupation, quench_map_series, relaxation_run, trace_distances, uniform_grid,
    Analysis, Engine, Model, ModelSpec,
};
use nmpemba::state::{trace_distance, DensityOperator};
use nmpemba::tomography::{fixed_point, tcl_generator, MemoryTimes, SignConvention};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BathConfig, ExperimentConfig, Loaded};
use crate::failure::Failure;
use crate::output::{num, opt, Table, Writer};

/// Build the model, sample the maps on `[0, tau_max]` and analyse them.
pub fn analyse(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<(Model, Analysis), Failure> {
    let model = Model::build(spec)?;
    let maps = model.map_series(&uniform_grid(cfg.run.dt, cfg.run.tau_max), SignConvention::Fermionic)?;
    let analysis = analyze(maps, cfg.run.epsilon_memory, cfg.run.amplitude_tolerance)?;
    Ok((model, analysis))
}

/// Relaxation traces on the long grid. Unphysical states are propagated with
/// the maps, which act linearly on any operator.
fn relax(cfg: &ExperimentConfig, model: &Model, rho0: &DensityOperator, physical: bool) -> Result<Vec<DensityOperator>, Failure> {
    let taus = uniform_grid(cfg.run.relaxation_dt, cfg.run.relaxation_tau_max);
    let engine = if physical { Engine::Auto } else { Engine::Map };
    Ok(relaxation_run(model, rho0, &taus, engine)?)
}

#[derive(Debug, Serialize)]
pub struct SingleDotReport {
    pub memory: MemoryTimes,
    pub slippage_tau: f64,
    pub p_inf: f64,
    pub p_fast: f64,
    pub delta_p: f64,
    /// Landauer occupation; undefined for a decoupled dot.
    pub p_negf: Option<f64>,
    pub physical: bool,
    pub kind: MpembaKind,
    pub mpemba: MpembaReport,
}

pub fn single_dot(loaded: &Loaded) -> Result<String, Failure> {
    let cfg = &loaded.config;
    cfg.expect_shape("single-dot", 1, 1)?;
    let spec = cfg.model_spec()?;
    let (model, a) = analyse(cfg, &spec)?;
    let out = Writer::new(&cfg.output, &loaded.sha256)?;

    let mut tdfp = Table::new(&["tau", "p_tdfp", "lambda2_re", "lambda2_im"]);
    for ((tau, rho), rate) in a.taus.iter().zip(a.tdfp_series()).zip(a.rate_series()) {
        tdfp.push(vec![
            num(*tau),
            opt(rho.as_ref().map(occupation)),
            opt(rate.map(|z| z.re)),
            opt(rate.map(|z| z.im)),
        ]);
    }
    out.csv("single_dot_tdfp.csv", &tdfp)?;

    let from_ss = relax(cfg, &model, &a.steady_state, true)?;
    let from_fast = relax(cfg, &model, &a.fast.state, a.fast.physical)?;
    let mut relaxation = Table::new(&["tau", "p_from_steady", "p_from_fast"]);
    let taus = uniform_grid(cfg.run.relaxation_dt, cfg.run.relaxation_tau_max);
    for ((tau, s), f) in taus.iter().zip(&from_ss).zip(&from_fast) {
        relaxation.push(vec![num(*tau), num(occupation(s)), num(occupation(f))]);
    }
    out.csv("single_dot_relaxation.csv", &relaxation)?;

    let p_inf = occupation(&a.steady_state);
    let p_fast = occupation(&a.fast.state);
    let coupled = spec.baths.iter().any(|b| b.density.gamma > 0.0);
    let p_negf = if coupled { Some(NegfModel::new(&spec.system, &spec.baths)?.steady_occupation()[0]) } else { None };
    let report = SingleDotReport {
        memory: a.memory,
        slippage_tau: a.taus[a.slippage_index],
        p_inf,
        p_fast,
        delta_p: p_fast - p_inf,
        p_negf,
        physical: a.fast.physical,
        kind: a.report.kind,
        mpemba: a.report.clone(),
    };
    out.json("single_dot_report.json", &report)?;
    Ok(format!(
        "tau_L = {:.2}, tau_Lambda = {}, p_inf = {p_inf:.6}, p_f = {p_fast:.6}, p_negf = {}, kind = {:?}, physical = {}",
        a.memory.tau_l,
        a.memory.tau_lambda.map_or("none".into(), |t| format!("{t:.2}")),
        p_negf.map_or("none".into(), |p| format!("{p:.6}")),
        a.report.kind,
        a.fast.physical
    ))
}

#[derive(Debug, Serialize)]
pub struct DoubleDotReport {
    pub memory: MemoryTimes,
    pub slippage_tau: f64,
    pub occupations_inf: Vec<f64>,
    pub occupations_fast: Vec<f64>,
    /// `T[ρ_f, ρ(∞)]`.
    pub delta: f64,
    pub physical: bool,
    pub kind: MpembaKind,
    /// `⟨J⟩ = i⟨s₁†s₂ − s₂†s₁⟩` in the dynamical steady state and in `ρ_f`.
    pub current_inf: f64,
    pub current_fast: f64,
    /// Left-to-right particle current from the Landauer formula, and `I/g`.
    pub negf_particle_current: f64,
    pub negf_current: Option<f64>,
    pub mpemba: MpembaReport,
}

pub fn double_dot(loaded: &Loaded) -> Result<String, Failure> {
    let cfg = &loaded.config;
    cfg.expect_shape("double-dot", 2, 2)?;
    let spec = cfg.model_spec()?;
    let (model, a) = analyse(cfg, &spec)?;
    let out = Writer::new(&cfg.output, &loaded.sha256)?;

    let mut tdfp = Table::new(&["tau", "n1_tdfp", "n2_tdfp", "current_tdfp", "slowest_rate"]);
    for ((tau, rho), rate) in a.taus.iter().zip(a.tdfp_series()).zip(a.rate_series()) {
        let occ = rho.as_ref().map(|r| r.occupations());
        tdfp.push(vec![
            num(*tau),
            opt(occ.as_ref().map(|o| o[0])),
            opt(occ.as_ref().map(|o| o[1])),
            opt(rho.as_ref().map(dot_current)),
            opt(rate.map(|z| z.re)),
        ]);
    }
    out.csv("double_dot_tdfp.csv", &tdfp)?;

    let from_ss = relax(cfg, &model, &a.steady_state, true)?;
    let from_fast = relax(cfg, &model, &a.fast.state, a.fast.physical)?;
    let t_ss = trace_distances(&from_ss, &a.steady_state);
    let t_fast = trace_distances(&from_fast, &a.steady_state);
    let taus = uniform_grid(cfg.run.relaxation_dt, cfg.run.relaxation_tau_max);
    let mut relaxation =
        Table::new(&["tau", "trace_distance_from_steady", "trace_distance_from_fast", "current_from_steady", "current_from_fast"]);
    for k in 0..taus.len() {
        relaxation.push(vec![
            num(taus[k]),
            num(t_ss[k]),
            num(t_fast[k]),
            num(dot_current(&from_ss[k])),
            num(dot_current(&from_fast[k])),
        ]);
    }
    out.csv("double_dot_relaxation.csv", &relaxation)?;

    let (particle, _) = NegfModel::new(&spec.system, &spec.baths)?.steady_currents();
    let g = spec.system.hopping;
    let report = DoubleDotReport {
        memory: a.memory,
        slippage_tau: a.taus[a.slippage_index],
        occupations_inf: a.steady_state.occupations(),
        occupations_fast: a.fast.state.occupations(),
        delta: trace_distance(&a.fast.state, &a.steady_state),
        physical: a.fast.physical,
        kind: a.report.kind,
        current_inf: dot_current(&a.steady_state),
        current_fast: dot_current(&a.fast.state),
        negf_particle_current: particle,
        negf_current: (g != 0.0).then(|| particle / g),
        mpemba: a.report.clone(),
    };
    out.json("double_dot_report.json", &report)?;
    Ok(format!(
        "tau_L = {:.2}, tau_Lambda = {}, T[rho_f, rho_inf] = {:.6}, kind = {:?}, physical = {}, <J>_inf = {:.6e}, <J>_negf = {}",
        a.memory.tau_l,
        a.memory.tau_lambda.map_or("none".into(), |t| format!("{t:.2}")),
        report.delta,
        report.kind,
        report.physical,
        report.current_inf,
        opt(report.negf_current)
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub beta: f64,
    pub mu_left: f64,
    pub mu_right: Option<f64>,
    /// `p_f − p(∞)` for one dot, `T[ρ_f, ρ(∞)]` for two.
    pub delta: Option<f64>,
    pub physical: Option<bool>,
    pub tau_l: Option<f64>,
    pub tau_lambda: Option<f64>,
    pub kind: Option<MpembaKind>,
    pub status: String,
}

fn sweep_point(cfg: &ExperimentConfig, baths: &[BathConfig]) -> SweepRow {
    let mut row = SweepRow {
        gamma: baths[0].gamma,
        beta: baths[0].beta,
        mu_left: baths[0].mu,
        mu_right: baths.get(1).map(|b| b.mu),
        delta: None,
        physical: None,
        tau_l: None,
        tau_lambda: None,
        kind: None,
        status: "ok".into(),
    };
    let result = cfg.model_spec_with(baths, cfg.run.n_modes).and_then(|spec| analyse(cfg, &spec));
    match result {
        Ok((_, a)) => {
            row.delta = Some(if cfg.system.epsilon.len() == 1 {
                occupation(&a.fast.state) - occupation(&a.steady_state)
            } else {
                trace_distance(&a.fast.state, &a.steady_state)
            });
            row.physical = Some(a.fast.physical);
            row.tau_l = Some(a.memory.tau_l);
            row.tau_lambda = a.memory.tau_lambda;
            row.kind = Some(a.report.kind);
        }
        Err(e) => row.status = e.to_string(),
    }
    row
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub points: usize,
    pub failed: usize,
    pub rows: Vec<SweepRow>,
}

pub fn sweep(loaded: &Loaded) -> Result<String, Failure> {
    let cfg = &loaded.config;
    let grid = cfg.sweep.as_ref().ok_or_else(|| Failure::Config("sweep needs a [sweep] section".into()))?;
    let points = grid.points(&cfg.baths);
    // each point is independent; collect preserves grid order
    let rows: Vec<SweepRow> = points.par_iter().map(|p| sweep_point(cfg, p)).collect();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed == rows.len() {
        return Err(Failure::Numerical(nmpemba::Error::InvalidInput(format!(
            "every sweep point failed; first: {}",
            rows[0].status
        ))));
    }

    let out = Writer::new(&cfg.output, &loaded.sha256)?;
    let delta = if cfg.system.epsilon.len() == 1 { "delta_p" } else { "trace_distance" };
    let mut table =
        Table::new(&["gamma", "beta", "mu_left", "mu_right", delta, "physical", "tau_l", "tau_lambda", "kind", "status"]);
    for r in &rows {
        table.push(vec![
            num(r.gamma),
            num(r.beta),
            num(r.mu_left),
            opt(r.mu_right),
            opt(r.delta),
            r.physical.map_or_else(String::new, |b| b.to_string()),
            opt(r.tau_l),
            opt(r.tau_lambda),
            r.kind.map_or_else(String::new, |k| format!("{k:?}")),
            r.status.clone(),
        ]);
    }
    out.csv("sweep.csv", &table)?;
    let report = SweepReport { points: rows.len(), failed, rows };
    out.json("sweep_report.json", &report)?;
    Ok(format!("{} points, {} failed", report.points, failed))
}

#[derive(Debug, Serialize)]
pub struct QuenchReport {
    pub tau_q: f64,
    /// Memory time of the sudden quench; the slippage is taken at `τ_L + τ_q`.
    pub memory_sudden: MemoryTimes,
    pub slippage_tau: f64,
    pub occupations_inf: Vec<f64>,
    pub occupations_fast: Vec<f64>,
    pub occupations_fast_sudden: Vec<f64>,
    pub physical: bool,
    /// Largest `T[ρ(τ), ρ(∞)]` at or after the slippage time.
    pub residual_fast: f64,
    pub residual_fast_sudden: f64,
}

pub fn quench(loaded: &Loaded) -> Result<String, Failure> {
    let cfg = &loaded.config;
    let spec = cfg.model_spec()?;
    let (model, sudden) = analyse(cfg, &spec)?;
    let tau_q = cfg.run.quench.tau_q;
    let dt = cfg.run.dt;
    let taus = uniform_grid(dt, tau_q + cfg.run.tau_max);
    let maps = quench_map_series(&model, &cfg.quench(), &taus, SignConvention::Fermionic)?;
    let k = ((sudden.memory.tau_l + tau_q) / dt).round() as usize;
    let rho_ss = fixed_point(&tcl_generator(&maps, k)?)?;
    let fast = fast_state(&maps[k], &rho_ss)?;
    let fast_sudden = &sudden.fast.state;

    let traces_fast = trace_distances(&maps_apply(&maps, &fast.state), &rho_ss);
    let traces_sudden = trace_distances(&maps_apply(&maps, fast_sudden), &rho_ss);
    let after = |t: &[f64]| t[k..].iter().copied().fold(0.0, f64::max);

    let out = Writer::new(&cfg.output, &loaded.sha256)?;
    let mut table = Table::new(&["tau", "trace_distance_from_fast", "trace_distance_from_fast_sudden"]);
    for i in 0..taus.len() {
        table.push(vec![num(taus[i]), num(traces_fast[i]), num(traces_sudden[i])]);
    }
    out.csv("quench.csv", &table)?;
    let report = QuenchReport {
        tau_q,
        memory_sudden: sudden.memory,
        slippage_tau: taus[k],
        occupations_inf: rho_ss.occupations(),
        occupations_fast: fast.state.occupations(),
        occupations_fast_sudden: fast_sudden.occupations(),
        physical: fast.physical,
        residual_fast: after(&traces_fast),
        residual_fast_sudden: after(&traces_sudden),
    };
    out.json("quench_report.json", &report)?;
    Ok(format!(
        "tau_q = {tau_q}, slippage at {}, max T after slippage: rho_f(tau_q) {:.3e}, rho_f(0) {:.3e}",
        taus[k], report.residual_fast, report.residual_fast_sudden
    ))
}
