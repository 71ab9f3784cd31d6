use std::f64::consts::PI;

use proptest::prelude::*;

use preytaxis_core::linstab::*;
use preytaxis_core::model::{compute_equilibria, Equilibrium, KineticsModel, MotilityModel};

fn rm_case(gamma: f64, lambda: f64, cap: f64) -> Option<(KineticsModel, Equilibrium)> {
    let kin = KineticsModel::rosenzweig_macarthur(gamma, 1.0, 0.0, 1.0, cap, lambda).ok()?;
    let eq = compute_equilibria(&kin).ok()?.coexistence?;
    Some((kin, eq))
}

fn motility(i: usize, d: f64, chi: f64) -> MotilityModel {
    match i {
        0 => MotilityModel::d1(),
        1 => MotilityModel::d2(),
        2 => MotilityModel::d3(),
        _ => MotilityModel::constant(d, chi).unwrap(),
    }
}

proptest! {
    #[test]
    fn roots_satisfy_vieta(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let [r1, r2] = quadratic_roots(a, b);
        let scale = 1.0 + a.abs() + b.abs();
        prop_assert!(((r1 + r2).re + a).abs() <= 1e-12 * scale);
        prop_assert!((r1 + r2).im.abs() <= 1e-12 * scale);
        prop_assert!(((r1 * r2).re - b).abs() <= 1e-12 * scale * scale);
        prop_assert!(r1.re >= r2.re);
    }

    #[test]
    fn classification_matches_coefficients(
        gamma in 1.5f64..4.0, lambda in 0.2f64..3.0, cap in 2.0f64..6.0,
        mi in 0usize..4, dc in 0.05f64..2.0, chi in -1.0f64..1.0,
        d in 1e-4f64..1.0, k in 0.0f64..4.0,
    ) {
        let Some((kin, eq)) = rm_case(gamma, lambda, cap) else { return Ok(()); };
        let sys = linearize(&kin, &motility(mi, dc, chi), d, &eq).unwrap();
        let p = dispersion(&sys, k);
        match p.class {
            StabilityClass::Stable => prop_assert!(p.a > 0.0 && p.b > 0.0),
            StabilityClass::HopfUnstable => prop_assert!(p.a < 0.0 && p.delta < 0.0),
            StabilityClass::SteadyUnstable => prop_assert!(p.delta >= 0.0 || p.b < 0.0),
            StabilityClass::Marginal => prop_assert!(p.max_re().abs() <= MARGINAL_TOL),
        }
    }

    #[test]
    fn bifurcation_curves_are_neutral(
        gamma in 1.5f64..4.0, lambda in 0.2f64..3.0, cap in 2.0f64..6.0,
        mi in 0usize..3, eta in 0.01f64..50.0,
    ) {
        let Some((kin, eq)) = rm_case(gamma, lambda, cap) else { return Ok(()); };
        let mot = motility(mi, 0.0, 0.0);
        let c = bifurcation_curves(&kin, &mot, &eq, &[eta]).unwrap();
        let probe = linearize(&kin, &mot, 1.0, &eq).unwrap();
        let dh = c.d_hopf[0];
        if dh > 0.0 {
            let sys = probe.with_diffusivity(dh);
            prop_assert!(sys.trace_coeff(eta).abs() <= 1e-10 * (1.0 + eta));
        }
        let ds = c.d_steady[0];
        if ds > 0.0 && ds.is_finite() {
            let sys = probe.with_diffusivity(ds);
            prop_assert!(sys.det_coeff(eta).abs() <= 1e-9 * (1.0 + eta * eta));
        }
    }

    #[test]
    fn beta_form_matches_generic_coefficients(
        gamma in 1.5f64..4.0, lambda in 0.2f64..3.0, cap in 2.0f64..6.0,
        mi in 0usize..3, d in 1e-4f64..1.0, eta in 0.0f64..20.0,
    ) {
        let Some((kin, eq)) = rm_case(gamma, lambda, cap) else { return Ok(()); };
        let mot = motility(mi, 0.0, 0.0);
        let beta = beta_coefficients(&kin, &mot, &eq).unwrap();
        let sys = linearize(&kin, &mot, d, &eq).unwrap();
        let ds = sys.d_star();
        let scale = 1.0 + eta * eta;
        prop_assert!((beta.trace_coeff(d, ds, eta) - sys.trace_coeff(eta)).abs() <= 1e-12 * scale);
        prop_assert!((beta.det_coeff(d, ds, eta) - sys.det_coeff(eta)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn steady_band_is_where_det_is_negative(
        gamma in 1.5f64..4.0, lambda in 0.2f64..3.0, cap in 2.0f64..6.0,
        mi in 0usize..3, log_d in -5.0f64..0.0, s in 0.0f64..1.0,
    ) {
        let Some((kin, eq)) = rm_case(gamma, lambda, cap) else { return Ok(()); };
        let mot = motility(mi, 0.0, 0.0);
        let d = 10f64.powf(log_d);
        let beta = beta_coefficients(&kin, &mot, &eq).unwrap();
        let ds = mot.motility(eq.v);
        if let Some(band) = steady_band(&beta, d, ds).unwrap() {
            let eta = band.lower + s * (band.upper - band.lower);
            if eta > band.lower && eta < band.upper {
                prop_assert!(beta.det_coeff(d, ds, eta) < 0.0);
            }
            prop_assert!(beta.det_coeff(d, ds, band.upper * 1.01) > 0.0);
            prop_assert!(beta.det_coeff(d, ds, band.lower * 0.99) > 0.0);
        } else {
            for i in 0..200 {
                let eta = 0.05 * i as f64 * (1.0 + 1.0 / d);
                prop_assert!(beta.det_coeff(d, ds, eta) >= -1e-12);
            }
        }
    }

    #[test]
    fn modes_beyond_cutoff_are_stable(
        gamma in 1.5f64..4.0, lambda in 0.2f64..3.0, cap in 2.0f64..6.0,
        mi in 0usize..3, log_d in -4.0f64..0.0, ell in 1.0f64..40.0,
    ) {
        let Some((kin, eq)) = rm_case(gamma, lambda, cap) else { return Ok(()); };
        let sys = linearize(&kin, &motility(mi, 0.0, 0.0), 10f64.powf(log_d), &eq).unwrap();
        let cut = mode_cutoff(&sys, ell);
        for m in interval_spectrum(&sys, ell, 4 * cut + 50).into_iter().skip(cut + 1) {
            prop_assert_eq!(m.class(), StabilityClass::Stable, "n = {}", m.n);
        }
    }
}

#[test]
fn case_two_mode_range() {
    let (kin, eq) = rm_case(2.0, 1.0, 4.0).unwrap();
    let modes = unstable_modes(&kin, &MotilityModel::d2(), 1.0 / 4800.0, &eq, 4.0 * PI).unwrap();
    let steady: Vec<usize> = modes
        .iter()
        .filter(|m| m.class() == StabilityClass::SteadyUnstable)
        .map(|m| m.n)
        .collect();
    assert_eq!(steady, (12..=81).collect::<Vec<_>>());
}

#[test]
fn case_one_has_no_steady_band() {
    let (kin, eq) = rm_case(2.0, 1.0, 4.0).unwrap();
    let mot = MotilityModel::d1();
    let beta = beta_coefficients(&kin, &mot, &eq).unwrap();
    assert!(steady_threshold_diffusivity(&beta, 0.5).unwrap().is_none());
    for d in [1e-6, 1e-3, 0.1, 10.0] {
        assert!(steady_band(&beta, d, 0.5).unwrap().is_none());
    }
}

#[test]
fn hopf_band_brackets_unstable_hopf_modes() {
    let (kin, eq) = rm_case(2.0, 1.0, 4.0).unwrap();
    let mot = MotilityModel::d1();
    let beta = beta_coefficients(&kin, &mot, &eq).unwrap();
    let band = hopf_band(&beta, 0.1, 0.5).unwrap().unwrap();
    let sys = linearize(&kin, &mot, 0.1, &eq).unwrap();
    for i in 0..400 {
        let eta = 0.05 * i as f64;
        let hopf = sys.trace_coeff(eta) < 0.0 && sys.det_coeff(eta) > 0.0;
        let delta = beta.discriminant(0.1, 0.5, eta);
        if hopf && delta < 0.0 {
            // The lower edge is clipped to zero here, so it belongs to the band.
            assert!(eta >= band.lower && eta < band.upper, "eta {eta} outside {band:?}");
        }
    }
}

#[test]
fn stabilizing_diffusivity_for_unstable_homogeneous_state() {
    let (kin, eq) = rm_case(2.0, 1.0, 4.0).unwrap();
    let r = min_stabilizing_d(&kin, &MotilityModel::d1(), &eq, 8.0 * PI).unwrap();
    assert!(r.homogeneous_unstable);
    assert!(r.threshold.is_none());
}
