//! Slippage decomposition and memory-time checks on the weak-coupling single dot.

use std::sync::OnceLock;

use nmpemba::bath::{BathSpec, SpectralDensity};
use nmpemba::gaussian::SystemSpec;
use nmpemba::linalg::{self, trace_norm};
use nmpemba::pipeline::{analyze, occupation, uniform_grid, Analysis, Model, ModelSpec};
use nmpemba::redfield::{correlation_memory_time, RedfieldModel, DEFAULT_DECAY_THRESHOLD};
use nmpemba::state::DensityOperator;
use nmpemba::superop::SuperOperator;
use nmpemba::tomography::{generator_series, memory_times, SignConvention};

const EPSILON: f64 = 1e-3;

fn spec(epsilon: f64, gamma: f64) -> ModelSpec {
    let bath = BathSpec::new(SpectralDensity::new(gamma, 1.0).unwrap(), 10.0, 0.1, 200).unwrap();
    ModelSpec { system: SystemSpec::single_dot(epsilon), baths: vec![bath], quadrature_points: 2000 }
}

fn analysis_for(s: &ModelSpec) -> Analysis {
    let model = Model::build(s).unwrap();
    let maps = model.map_series(&uniform_grid(0.05, 150.0), SignConvention::Fermionic).unwrap();
    analyze(maps, EPSILON, 1e-6).unwrap()
}

fn reference_run() -> &'static Analysis {
    static CELL: OnceLock<Analysis> = OnceLock::new();
    CELL.get_or_init(|| analysis_for(&spec(0.0, 0.01)))
}

#[test]
fn long_time_maps_factor_through_slippage() {
    let a = reference_run();
    let t0 = a.taus[a.slippage_index];
    let worst = a
        .maps
        .iter()
        .filter(|m| m.tau >= t0)
        .map(|m| {
            let pred = a.converged_generator.exp(m.tau - t0).compose(&a.slippage);
            trace_norm(&(&pred.matrix - &m.matrix))
        })
        .fold(0.0, f64::max);
    assert!(worst <= 5.0 * EPSILON, "{worst:e}");
}

#[test]
fn damping_basis_reconstructs_states_after_memory_time() {
    let a = reference_run();
    let t0 = a.taus[a.slippage_index];
    for p0 in [0.0, 0.4, 1.0] {
        let rho0 = DensityOperator::product(&[p0]).unwrap();
        for m in a.maps.iter().filter(|m| m.tau >= t0) {
            let err = trace_norm(&(&a.reconstruct(&rho0, m.tau) - &m.apply(&rho0.matrix)));
            assert!(err <= 5.0 * EPSILON, "p0 {p0} tau {} err {err:e}", m.tau);
        }
    }
}

#[test]
fn memory_times_do_not_grow_with_tolerance() {
    let a = reference_run();
    let mut last: Option<(f64, Option<f64>)> = None;
    for eps in [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2] {
        let (m, _) = memory_times(&a.maps, &a.generators, eps).unwrap();
        if let Some((tl, ta)) = last {
            assert!(m.tau_l <= tl, "tau_L {} > {tl} at eps {eps}", m.tau_l);
            if let Some(prev) = ta {
                assert!(m.tau_lambda.unwrap() <= prev);
            }
        }
        last = Some((m.tau_l, m.tau_lambda));
    }
}

#[test]
fn converged_generator_matches_redfield_to_second_order() {
    let a = reference_run();
    let s = spec(0.0, 0.01);
    let rf = RedfieldModel::new(&s.system, &s.baths, 4000).unwrap();
    let l_re = rf.generator(f64::INFINITY);
    // population block: indices 0 (|0⟩⟨0|) and 3 (|1⟩⟨1|)
    let mut worst = 0.0f64;
    for i in [0, 3] {
        for j in [0, 3] {
            worst = worst.max((a.converged_generator.matrix[(i, j)] - l_re.matrix[(i, j)]).norm());
        }
    }
    assert!(worst < 2.0 * 0.01f64.powi(2), "{worst:e}");
}

#[test]
fn perturbative_fast_state_tracks_tomography() {
    let a = reference_run();
    let s = spec(0.0, 0.01);
    let rf = RedfieldModel::new(&s.system, &s.baths, 4000).unwrap();
    let tau_m = a.taus[a.slippage_index];
    let pf = rf.perturbative_fast_state(tau_m, &a.steady_state, 0.05).unwrap();
    assert!((pf.trace().re - 1.0).abs() < 1e-12);
    assert!((occupation(&pf) - occupation(&a.fast.state)).abs() < 0.01);
}

#[test]
fn decoupled_dot_evolves_unitarily() {
    let s = spec(0.3, 0.0);
    let model = Model::build(&s).unwrap();
    let maps = model.map_series(&uniform_grid(0.1, 10.0), SignConvention::Fermionic).unwrap();
    let h = s.system.many_body_hamiltonian();
    let generators = generator_series(&maps);
    for (m, g) in maps.iter().zip(&generators).step_by(7) {
        let u = linalg::hermitian_exp(&h, nmpemba::c64::new(0.0, -m.tau));
        assert!(m.distance(&SuperOperator::conjugation(&u)) < 1e-10);
        // finite differences: O(dt²) error on a rotation at frequency 0.3
        assert!(g.as_ref().unwrap().distance(&SuperOperator::commutator(&h)) < 1e-3);
    }
}

// The two checks below document known disagreements (see README, "Known limitations"):
// with the rate-relative generator criterion τ_L grows with the dot energy and
// exceeds the correlation-decay estimate by more than a factor of two.

#[test]
#[ignore = "τ_L depends on the dot energy under the rate-relative criterion"]
fn memory_time_is_a_bath_property() {
    let base = reference_run().memory.tau_l;
    for eps in [0.1, 0.2] {
        let tau_l = analysis_for(&spec(eps, 0.01)).memory.tau_l;
        assert!((tau_l - base).abs() <= 0.05 + 1e-9, "eps {eps}: {tau_l} vs {base}");
    }
}

#[test]
#[ignore = "correlation decay gives ~12.7 against τ_L ~42"]
fn correlation_decay_memory_time_agrees_with_tomography() {
    let s = spec(0.0, 0.01);
    let tc = correlation_memory_time(&s.baths[0], DEFAULT_DECAY_THRESHOLD, 200.0, 0.05).unwrap();
    let tl = reference_run().memory.tau_l;
    assert!(tc <= 2.0 * tl && tl <= 2.0 * tc, "{tc} vs {tl}");
}

#[test]
fn decoupled_dot_has_no_mpemba_effect() {
    let model = Model::build(&spec(0.3, 0.0)).unwrap();
    let maps = model.map_series(&uniform_grid(0.1, 20.0), SignConvention::Fermionic).unwrap();
    let a = analyze(maps, EPSILON, 1e-6).unwrap();
    assert_eq!(a.report.kind, nmpemba::mpemba::MpembaKind::None);
    assert_eq!(a.memory.tau_l, 0.0);
    assert!(nmpemba::pipeline::is_unitary_channel(&a.slippage, 1e-10));
    assert!(a.fast.physical && a.report.delta == 0.0);
}
