use nmpemba::bath::{fermi, fermi_complement, BathSpec, SpectralDensity};
use nmpemba::c64;
use nmpemba::fock;
use nmpemba::gaussian::SystemSpec;
use nmpemba::linalg::{self, CMat};
use nmpemba::mpemba::{fast_state, single_dot_fast_occupation};
use nmpemba::negf::NegfModel;
use nmpemba::pipeline::{uniform_grid, Model, ModelSpec};
use nmpemba::state::DensityOperator;
use nmpemba::superop::{unvectorize, vectorize, SuperOperator};
use nmpemba::tomography::{fixed_point, generator_series, memory_times, slippage, tcl_generator, SignConvention};
use proptest::prelude::*;

/// Qubit Lindbladian with loss `down`, gain `up`, dephasing `phi` and level splitting `w`.
fn lindblad(w: f64, down: f64, up: f64, phi: f64) -> SuperOperator {
    let s = fock::annihilation(1, 0);
    let sd = s.adjoint().to_owned();
    let n = fock::number(1, 0);
    let h = linalg::scale(&n, c64::new(w, 0.0));
    let dissipator = |a: &CMat, rho: &CMat, rate: f64| -> CMat {
        let ad = a.adjoint();
        let ada = ad * a;
        let jump = &(a * rho) * ad;
        let anti = &(&ada * rho) + &(rho * &ada);
        linalg::scale(&(&jump - &linalg::scale(&anti, c64::new(0.5, 0.0))), c64::new(rate, 0.0))
    };
    SuperOperator::from_map(2, |rho| {
        let comm = &(&h * rho) - &(rho * &h);
        let mut out = linalg::scale(&comm, c64::new(0.0, -1.0));
        out += dissipator(&s, rho, down);
        out += dissipator(&sd, rho, up);
        out += dissipator(&n, rho, phi);
        out
    })
}

fn markovian_series(l: &SuperOperator, dt: f64, n: usize) -> Vec<SuperOperator> {
    (0..n).map(|k| l.exp(k as f64 * dt).with_tau(k as f64 * dt)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fermi_factors_are_complementary_and_decreasing(
        beta in 0.0f64..50.0, mu in -1.0f64..1.0, w in -1.0f64..1.0, dw in 1e-3f64..0.5,
    ) {
        let f = fermi(beta, mu, w);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f + fermi_complement(beta, mu, w) - 1.0).abs() < 1e-14);
        prop_assert!(fermi(beta, mu, w + dw) <= f);
    }

    #[test]
    fn vectorization_round_trips(re in prop::collection::vec(-1.0f64..1.0, 16), im in prop::collection::vec(-1.0f64..1.0, 16)) {
        let x = CMat::from_fn(4, 4, |i, j| c64::new(re[i + 4 * j], im[i + 4 * j]));
        let y = unvectorize(&vectorize(&x), 4);
        prop_assert!(linalg::max_abs(&(&x - &y)) == 0.0);
    }

    #[test]
    fn lindblad_semigroup_is_cptp(w in -1.0f64..1.0, down in 0.0f64..1.0, up in 0.0f64..1.0, phi in 0.0f64..1.0, t in 0.0f64..5.0) {
        let m = lindblad(w, down, up, phi).exp(t);
        prop_assert!(m.trace_preservation_residual() < 1e-10);
        prop_assert!(m.choi_min_eigenvalue() > -1e-10);
    }

    #[test]
    fn generator_is_recovered_from_markovian_maps(w in -1.0f64..1.0, down in 0.01f64..1.0, up in 0.0f64..1.0, phi in 0.0f64..0.5) {
        let l = lindblad(w, down, up, phi);
        let dt = 0.01;
        let maps = markovian_series(&l, dt, 40);
        let scale = l.matrix.norm_max();
        for k in [0, 1, 20, 39] {
            let g = tcl_generator(&maps, k).unwrap();
            // central differences are O(dt²), one-sided second-order stencils O(dt²) with a larger constant
            prop_assert!(g.distance(&l) < 2.0 * dt * dt * scale.powi(3), "k {} err {:e}", k, g.distance(&l));
        }
    }

    #[test]
    fn fixed_point_is_the_detailed_balance_state(w in -1.0f64..1.0, down in 0.01f64..1.0, up in 0.01f64..1.0, phi in 0.0f64..0.5) {
        let rho = fixed_point(&lindblad(w, down, up, phi)).unwrap();
        prop_assert!((rho.occupations()[0] - up / (up + down)).abs() < 1e-10);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn markovian_dynamics_has_no_memory(w in -1.0f64..1.0, down in 0.05f64..1.0, up in 0.0f64..1.0, phi in 0.0f64..0.5) {
        let l = lindblad(w, down, up, phi);
        let maps = markovian_series(&l, 0.01, 60);
        let gens = generator_series(&maps);
        let (m, _) = memory_times(&maps, &gens, 1e-3).unwrap();
        prop_assert_eq!(m.tau_l, 0.0);
        let (_, s) = slippage(&maps, m.tau_l).unwrap();
        prop_assert!(s.compose(&l).distance(&l.compose(&s)) < 1e-10);
    }

    #[test]
    fn closed_form_fast_occupation_matches_inversion(
        w in -1.0f64..1.0, down in 0.05f64..1.0, up in 0.05f64..1.0, phi in 0.0f64..0.5, t in 0.1f64..3.0, p in 0.05f64..0.95,
    ) {
        let s = lindblad(w, down, up, phi).exp(t);
        let rho = DensityOperator::product(&[p]).unwrap();
        let generic = fast_state(&s, &rho).unwrap().state.occupations()[0];
        prop_assert!((generic - single_dot_fast_occupation(&s, p)).abs() < 1e-10);
    }

    #[test]
    fn transmission_is_bounded(
        gl in 0.001f64..0.5, gr in 0.001f64..0.5, eps in -0.5f64..0.5, g in 0.0f64..0.5, w in -1.2f64..1.2,
    ) {
        let baths = vec![
            BathSpec::new(SpectralDensity::new(gl, 1.0).unwrap(), 10.0, 0.1, 4).unwrap(),
            BathSpec::new(SpectralDensity::new(gr, 1.0).unwrap(), 10.0, -0.1, 4).unwrap(),
        ];
        let model = NegfModel::new(&SystemSpec::double_dot(eps, g), &baths).unwrap();
        let t = model.transmission(w);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&t), "T = {}", t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_maps_are_cptp(
        gamma in 0.01f64..0.5, beta in 0.1f64..20.0, mu in -0.5f64..0.5, eps in -0.3f64..0.3,
        sites in 1usize..6, tau in 0.0f64..30.0, dqd in any::<bool>(),
    ) {
        let bath = |m: f64| BathSpec::new(SpectralDensity::new(gamma, 1.0).unwrap(), beta, m, sites).unwrap();
        let spec = if dqd {
            ModelSpec { system: SystemSpec::double_dot(eps, 0.1), baths: vec![bath(mu), bath(-mu)], quadrature_points: 400 }
        } else {
            ModelSpec { system: SystemSpec::single_dot(eps), baths: vec![bath(mu)], quadrature_points: 400 }
        };
        let model = Model::build(&spec).unwrap();
        let maps = model.map_series(&[0.0, tau], SignConvention::Fermionic).unwrap();
        prop_assert!(maps[0].distance(&SuperOperator::identity(maps[0].dim)) < 1e-10);
        prop_assert!(maps[1].trace_preservation_residual() < 1e-8);
        prop_assert!(maps[1].choi_min_eigenvalue() > -1e-7);
    }

    #[test]
    fn corrupted_string_signs_break_complete_positivity(gamma in 0.05f64..0.3, tau in 2.0f64..10.0) {
        let bath = |m: f64| BathSpec::new(SpectralDensity::new(gamma, 1.0).unwrap(), 5.0, m, 3).unwrap();
        let spec = ModelSpec { system: SystemSpec::double_dot(0.0, 0.1), baths: vec![bath(0.2), bath(-0.2)], quadrature_points: 400 };
        let model = Model::build(&spec).unwrap();
        let taus = uniform_grid(tau, tau);
        let err = model.map_series(&taus, SignConvention::Corrupted).unwrap_err();
        prop_assert!(matches!(err, nmpemba::Error::CpViolation { .. }), "{:?}", err);
    }
}
