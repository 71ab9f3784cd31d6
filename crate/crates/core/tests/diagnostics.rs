use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use preytaxis_core::diagnostics::*;
use preytaxis_core::model::{
    compute_equilibria, CustomKinetics, KineticsModel, MotilityModel,
};
use preytaxis_core::solver::{integrate, BaseState, Grid1D, SolverConfig, State};

fn rm(lambda: f64) -> KineticsModel {
    KineticsModel::rosenzweig_macarthur(2.0, 1.0, 0.0, 1.0, 4.0, lambda).unwrap()
}

/// Rosenzweig-MacArthur written as custom kinetics, so quadrature is used.
fn rm_custom(lambda: f64) -> KineticsModel {
    let kin = CustomKinetics {
        response: Arc::new(move |v| v / (lambda + v)),
        response_deriv: Arc::new(move |v| lambda / ((lambda + v) * (lambda + v))),
        growth: Arc::new(|v| v * (1.0 - v / 4.0)),
        growth_deriv: Arc::new(|v| 1.0 - v / 2.0),
    };
    KineticsModel::custom(2.0, 1.0, 0.0, 1.0, 4.0, kin).unwrap()
}

proptest! {
    #[test]
    fn closed_forms_match_quadrature(
        lambda in 0.1f64..5.0, omega in 0.05f64..6.0, v in 0.05f64..8.0, lv in any::<bool>(),
    ) {
        let kin = if lv {
            KineticsModel::lotka_volterra(2.0, 1.0, 0.0, 1.0, 4.0).unwrap()
        } else {
            rm(lambda)
        };
        let closed = zeta(&kin, omega, v).unwrap();
        let quad = zeta_by_quadrature(&kin, omega, v).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-10 * (1.0 + closed.abs()));
        prop_assert!(closed >= -1e-12);
    }

    #[test]
    fn custom_kinetics_use_quadrature(lambda in 0.1f64..5.0, omega in 0.1f64..6.0, v in 0.1f64..8.0) {
        let a = zeta(&rm(lambda), omega, v).unwrap();
        let b = zeta(&rm_custom(lambda), omega, v).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }
}

#[test]
fn zeta_is_convex() {
    let kin = rm(1.0);
    let omega = 1.0;
    let h = 1e-3;
    for i in 0..1000 {
        let v = 0.1 + 7.8 * i as f64 / 999.0;
        let second = zeta(&kin, omega, v + h).unwrap() - 2.0 * zeta(&kin, omega, v).unwrap()
            + zeta(&kin, omega, v - h).unwrap();
        assert!(second >= -1e-10, "v = {v}: {second}");
        // zeta'' = F(omega) F'(v) / F(v)^2.
        let exact = kin.response(omega) * kin.response_deriv(v) / kin.response(v).powi(2);
        assert!((second / (h * h) - exact).abs() < 1e-4 * (1.0 + exact), "v = {v}");
    }
}

#[test]
fn quadratic_bounds_near_omega() {
    for (kin, omega) in [(rm(1.0), 1.0), (rm(5.0), 2.5), (rm_custom(1.0), 1.0)] {
        let r = zeta_bounds_check(&kin, omega, ZETA_DELTA_FACTOR * omega).unwrap();
        assert!(r.lower_holds && r.upper_holds, "{r:?}");
    }
}

#[test]
fn v2_is_positive_away_from_coexistence() {
    use rand::{Rng, SeedableRng};
    let kin = rm(1.0);
    let eq = compute_equilibria(&kin).unwrap().coexistence.unwrap();
    let n = 20;
    let grid = Grid1D::new(5.0, n).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let s = State {
            t: 0.0,
            u: (0..n).map(|_| rng.random_range(0.01..5.0)).collect(),
            v: (0..n).map(|_| rng.random_range(0.01..5.0)).collect(),
        };
        assert!(lyapunov_v2(&s, &grid, &kin, &eq).unwrap() > 0.0);
    }
}

#[test]
fn v1_decreases_when_predators_die_out() {
    let kin = KineticsModel::rosenzweig_macarthur(1.0, 1.0, 0.0, 1.0, 4.0, 1.0).unwrap();
    let eq = compute_equilibria(&kin).unwrap().prey_only;
    let grid = Grid1D::new(4.0 * PI, 64).unwrap();
    let mut cfg = SolverConfig::new(kin, MotilityModel::d2(), 0.5, grid, BaseState::Equilibrium(eq), 20.0);
    cfg.perturbation.epsilon = 0.2;
    let traj = integrate(&cfg).unwrap();
    let v1: Vec<f64> = traj.timeseries.iter().map(|r| r.v1.unwrap()).collect();
    assert!(v1.iter().all(|&x| x >= -1e-12));
    assert!(v1.windows(2).all(|w| w[1] - w[0] < 1e-8));
}

#[test]
fn classifier_is_deterministic_on_real_runs() {
    let kin = KineticsModel::pattern_cases();
    let eq = compute_equilibria(&kin).unwrap().coexistence.unwrap();
    let grid = Grid1D::new(8.0 * PI, 64).unwrap();
    let cfg = SolverConfig::new(kin, MotilityModel::d1(), 0.1, grid, BaseState::Equilibrium(eq), 200.0);
    let traj = integrate(&cfg).unwrap();
    let a = classify_pattern(&traj, DEFAULT_TAIL_FRACTION).unwrap();
    let b = classify_pattern(&traj, DEFAULT_TAIL_FRACTION).unwrap();
    assert_eq!(a, b);
    assert!(a.oscillating);
}
