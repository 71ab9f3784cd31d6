use crate::model::{Equilibrium, EquilibriumKind, KineticsKind, KineticsModel};
use crate::numerics::adaptive_simpson;
use crate::solver::{Grid1D, State};
use crate::{Error, Result};

/// Absolute tolerance of the adaptive quadrature used for custom kinetics.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Default half-width of the `zeta` bound check, relative to `omega`.
pub const ZETA_DELTA_FACTOR: f64 = 0.2;

/// Sample count of [`zeta_bounds_check`].
pub const ZETA_SAMPLES: usize = 1001;

/// `w - w ln(v/w)` style term shared by both builtins: `(v - w) - w ln(v/w)`.
fn log_term(w: f64, v: f64) -> f64 {
    (v - w) - w * (v / w).ln()
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {x}")))
    }
}

/// `int_omega^v (F(s) - F(omega)) / F(s) ds` by adaptive Simpson quadrature,
/// whatever the kinetics.
pub fn zeta_by_quadrature(kin: &KineticsModel, omega: f64, v: f64) -> Result<f64> {
    check_positive("omega", omega)?;
    check_positive("v", v)?;
    let f_omega = kin.response(omega);
    let (lo, hi) = if v < omega { (v, omega) } else { (omega, v) };
    // F is only assumed positive on (0, inf); check the path ends and middle.
    for s in [lo, 0.5 * (lo + hi), hi] {
        let fs = kin.response(s);
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Domain(format!("F({s}) = {fs} on the integration path")));
        }
    }
    let integrand = |s: f64| 1.0 - f_omega / kin.response(s);
    let value = adaptive_simpson(&integrand, omega, v, QUADRATURE_TOL);
    if !value.is_finite() {
        return Err(Error::Domain(format!("zeta integral not finite for v = {v}")));
    }
    Ok(value)
}

/// `zeta(v) = int_omega^v (F(s) - F(omega)) / F(s) ds`; closed antiderivatives
/// for the builtins, quadrature otherwise.
pub fn zeta(kin: &KineticsModel, omega: f64, v: f64) -> Result<f64> {
    check_positive("omega", omega)?;
    check_positive("v", v)?;
    match kin.kind() {
        KineticsKind::LotkaVolterra => Ok(log_term(omega, v)),
        KineticsKind::RosenzweigMacArthur => {
            let lambda = kin.half_saturation();
            Ok(lambda / (lambda + omega) * log_term(omega, v))
        }
        KineticsKind::Custom(_) => zeta_by_quadrature(kin, omega, v),
    }
}

fn check_grid(state: &State, grid: &Grid1D) -> Result<()> {
    let n = grid.n_cells();
    if state.u.len() != n || state.v.len() != n {
        return Err(Error::param("state", format!("expected {n} cells")));
    }
    Ok(())
}

/// `V1 = (1/gamma) int u + int zeta_K(v)`, midpoint rule in space.
pub fn lyapunov_v1(state: &State, grid: &Grid1D, kin: &KineticsModel) -> Result<f64> {
    check_grid(state, grid)?;
    let h = grid.h();
    let k = kin.capacity();
    let mut mass = 0.0;
    let mut prey = 0.0;
    for (&u, &v) in state.u.iter().zip(&state.v) {
        mass += u;
        prey += zeta(kin, k, v)?;
    }
    Ok(h * (mass / kin.gamma() + prey))
}

/// `V2 = (1/gamma) int (u - u* - u* ln(u/u*)) + int zeta_{v*}(v)`.
pub fn lyapunov_v2(
    state: &State,
    grid: &Grid1D,
    kin: &KineticsModel,
    eq: &Equilibrium,
) -> Result<f64> {
    check_grid(state, grid)?;
    if eq.kind != EquilibriumKind::Coexistence {
        return Err(Error::Domain(format!(
            "V2 needs the coexistence state, got {}",
            eq.kind.as_str()
        )));
    }
    let h = grid.h();
    let mut pred = 0.0;
    let mut prey = 0.0;
    for (&u, &v) in state.u.iter().zip(&state.v) {
        check_positive("u", u)?;
        pred += log_term(eq.u, u);
        prey += zeta(kin, eq.v, v)?;
    }
    Ok(h * (pred / kin.gamma() + prey))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaBoundsReport {
    pub omega: f64,
    pub delta: f64,
    /// `F'(omega) / (4 F(omega))`.
    pub lower_coeff: f64,
    /// `F'(omega) / F(omega)`.
    pub upper_coeff: f64,
    pub samples: usize,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// Smallest `zeta - lower` over the samples.
    pub lower_margin: f64,
    /// Smallest `upper - zeta` over the samples.
    pub upper_margin: f64,
}

/// Samples `v` evenly on `[omega - delta, omega + delta]` and checks
/// `c/4 (v-omega)^2 <= zeta(v) <= c (v-omega)^2` with `c = F'(omega)/F(omega)`.
pub fn zeta_bounds_check(kin: &KineticsModel, omega: f64, delta: f64) -> Result<ZetaBoundsReport> {
    check_positive("omega", omega)?;
    if !(delta.is_finite() && delta > 0.0 && delta < omega) {
        return Err(Error::param("delta", format!("must lie in (0, omega), got {delta}")));
    }
    let f = kin.response(omega);
    check_positive("F(omega)", f)?;
    let c = kin.response_deriv(omega) / f;
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for i in 0..ZETA_SAMPLES {
        let v = omega - delta + 2.0 * delta * i as f64 / (ZETA_SAMPLES - 1) as f64;
        let z = zeta(kin, omega, v)?;
        let sq = (v - omega) * (v - omega);
        lower_margin = lower_margin.min(z - 0.25 * c * sq);
        upper_margin = upper_margin.min(c * sq - z);
    }
    let tol = 1e-14 * omega.max(1.0);
    Ok(ZetaBoundsReport {
        omega,
        delta,
        lower_coeff: 0.25 * c,
        upper_coeff: c,
        samples: ZETA_SAMPLES,
        lower_holds: lower_margin >= -tol,
        upper_holds: upper_margin >= -tol,
        lower_margin,
        upper_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_equilibria;

    fn rm() -> KineticsModel {
        KineticsModel::pattern_cases()
    }

    #[test]
    fn zeta_vanishes_at_omega() {
        assert_eq!(zeta(&rm(), 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(zeta_by_quadrature(&rm(), 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lv_half_capacity() {
        let kin = KineticsModel::lotka_volterra(1.0, 1.0, 0.0, 1.0, 4.0).unwrap();
        let expected = 4.0 * (std::f64::consts::LN_2 - 0.5);
        assert!((zeta(&kin, 4.0, 2.0).unwrap() - expected).abs() < 1e-14);
        assert!((zeta_by_quadrature(&kin, 4.0, 2.0).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn v1_examples() {
        let kin = rm();
        let grid = Grid1D::new(3.0, 30).unwrap();
        let s = State::homogeneous(0.0, 30, 0.0, 4.0);
        assert!(lyapunov_v1(&s, &grid, &kin).unwrap().abs() < 1e-15);
        let s = State::homogeneous(0.0, 30, 1.0, 4.0);
        assert!((lyapunov_v1(&s, &grid, &kin).unwrap() - 3.0 / 2.0).abs() < 1e-13);
        let s = State::homogeneous(0.0, 30, 1.0, 0.0);
        assert!(lyapunov_v1(&s, &grid, &kin).is_err());
    }

    #[test]
    fn v2_examples() {
        let kin = rm();
        let eq = compute_equilibria(&kin).unwrap().coexistence.unwrap();
        let grid = Grid1D::new(1.0, 16).unwrap();
        let s = State::homogeneous(0.0, 16, eq.u, eq.v);
        assert_eq!(lyapunov_v2(&s, &grid, &kin, &eq).unwrap(), 0.0);
        let s = State::homogeneous(0.0, 16, 2.0 * eq.u, eq.v);
        let expected = eq.u / kin.gamma() * (1.0 - std::f64::consts::LN_2);
        assert!((lyapunov_v2(&s, &grid, &kin, &eq).unwrap() - expected).abs() < 1e-14);
        let s = State::homogeneous(0.0, 16, 0.0, eq.v);
        assert!(lyapunov_v2(&s, &grid, &kin, &eq).is_err());
        let prey_only = compute_equilibria(&kin).unwrap().prey_only;
        assert!(lyapunov_v2(&s, &grid, &kin, &prey_only).is_err());
    }

    #[test]
    fn rm_bounds_hold_near_omega() {
        let r = zeta_bounds_check(&rm(), 1.0, 0.2).unwrap();
        assert!(r.lower_holds && r.upper_holds, "{r:?}");
        assert!((r.upper_coeff - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bounds_check_validates_delta() {
        assert!(zeta_bounds_check(&rm(), 1.0, 1.0).is_err());
        assert!(zeta_bounds_check(&rm(), 1.0, 0.0).is_err());
    }
}
