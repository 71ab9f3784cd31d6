use super::{compute_equilibria, Equilibrium, KineticsModel, MotilityModel};
use crate::numerics::golden_max;
use crate::{Error, Result};

/// Points in the coarse scan of the taxis threshold integrand.
pub const THRESHOLD_GRID_POINTS: usize = 10_001;

/// Tolerance of the `gamma F(K) = theta` equality test.
const EQUALITY_TOL: f64 = 1e-12;

/// `K_0 = max(|v_0|_inf, K)`, the a-priori upper bound of the prey field.
pub fn k0_bound(kin: &KineticsModel, v0_max: f64) -> f64 {
    v0_max.max(kin.capacity())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `gamma F(K) < theta`: exponential convergence to `(0, K)`.
    PreyOnlyExponential,
    /// `gamma F(K) = theta` with `alpha > 0`: algebraic convergence to `(0, K)`.
    PreyOnlyAlgebraic,
    /// `gamma F(K) = theta` with `alpha = 0`: not covered by the convergence result.
    Critical,
    /// `gamma F(K) > theta`.
    CoexistenceRegime,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::PreyOnlyExponential => "prey_only_exponential",
            Regime::PreyOnlyAlgebraic => "prey_only_algebraic",
            Regime::Critical => "critical",
            Regime::CoexistenceRegime => "coexistence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityThresholds {
    pub regime: Regime,
    pub gamma_f_capacity: f64,
    pub k0: f64,
    pub coexistence: Option<Equilibrium>,
    /// Smallest prey diffusivity for which the coexistence Lyapunov argument
    /// applies; `None` outside the coexistence regime.
    pub d_min: Option<f64>,
    /// Prey density attaining `d_min`.
    pub argmax: Option<f64>,
    /// `D >= d_min`.
    pub satisfied: Option<bool>,
}

/// Classifies the long-time regime and, for coexistence, evaluates the
/// diffusivity threshold
///
/// ```text
/// D_min = max_{0 <= v <= K0} u_* F(v)^2 chi(v)^2 / (4 gamma F(v_*) F'(v) d(v))
/// ```
pub fn global_stability_report(
    kin: &KineticsModel,
    mot: &MotilityModel,
    diffusivity: f64,
    v0_max: f64,
) -> Result<StabilityThresholds> {
    if !(diffusivity.is_finite() && diffusivity > 0.0) {
        return Err(Error::param("D", format!("must be > 0, got {diffusivity}")));
    }
    if !(v0_max >= 0.0) {
        return Err(Error::param("v0_max", format!("must be >= 0, got {v0_max}")));
    }
    let gfk = kin.gamma_f_capacity();
    let k0 = k0_bound(kin, v0_max);
    let gap = gfk - kin.theta();
    let regime = if gap.abs() <= EQUALITY_TOL {
        if kin.alpha() > 0.0 {
            Regime::PreyOnlyAlgebraic
        } else {
            Regime::Critical
        }
    } else if gap < 0.0 {
        Regime::PreyOnlyExponential
    } else {
        Regime::CoexistenceRegime
    };
    let mut report = StabilityThresholds {
        regime,
        gamma_f_capacity: gfk,
        k0,
        coexistence: None,
        d_min: None,
        argmax: None,
        satisfied: None,
    };
    if regime == Regime::CoexistenceRegime {
        let eq = compute_equilibria(kin)?
            .coexistence
            .ok_or_else(|| Error::RootFinding("coexistence state missing".into()))?;
        let (argmax, d_min) = taxis_threshold(kin, mot, &eq, k0)?;
        report.coexistence = Some(eq);
        report.d_min = Some(d_min);
        report.argmax = Some(argmax);
        report.satisfied = Some(diffusivity >= d_min);
    }
    Ok(report)
}

/// Maximizes the threshold integrand over `[0, k0]`: a scan over
/// [`THRESHOLD_GRID_POINTS`] points refined by golden-section search around
/// the discrete maximizer. Returns `(argmax, max)`.
pub fn taxis_threshold(
    kin: &KineticsModel,
    mot: &MotilityModel,
    eq: &Equilibrium,
    k0: f64,
) -> Result<(f64, f64)> {
    let scale = 4.0 * kin.gamma() * kin.response(eq.v);
    let integrand = |v: f64| -> f64 {
        let big_f = kin.response(v);
        let chi = mot.taxis(v);
        eq.u * big_f * big_f * chi * chi / (scale * kin.response_deriv(v) * mot.motility(v))
    };
    let n = THRESHOLD_GRID_POINTS;
    let h = k0 / (n - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let v = i as f64 * h;
        let fp = kin.response_deriv(v);
        let d = mot.motility(v);
        if fp == 0.0 || d == 0.0 {
            return Err(Error::DivisionByZero(format!(
                "F'(v) = {fp} or d(v) = {d} vanishes at v = {v}"
            )));
        }
        let g = integrand(v);
        if !g.is_finite() {
            return Err(Error::DivisionByZero(format!("non-finite integrand at v = {v}")));
        }
        if g > best.1 {
            best = (i, g);
        }
    }
    let (i, gmax) = best;
    let lo = i.saturating_sub(1) as f64 * h;
    let hi = ((i + 1).min(n - 1)) as f64 * h;
    let (x, fx) = golden_max(integrand, lo, hi, 1e-13 * k0.max(1.0));
    if fx.is_finite() && fx > gmax {
        Ok((x, fx))
    } else {
        Ok((i as f64 * h, gmax))
    }
}
