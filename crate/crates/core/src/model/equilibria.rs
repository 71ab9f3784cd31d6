use super::{KineticsKind, KineticsModel};
use crate::numerics::bisect;
use crate::{Error, Result};

/// Residual bound every returned equilibrium satisfies.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Coexistence is reported only when `gamma F(K) - theta` exceeds this.
const COEXISTENCE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    Extinction,
    PreyOnly,
    Coexistence,
}

impl EquilibriumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EquilibriumKind::Extinction => "extinction",
            EquilibriumKind::PreyOnly => "prey_only",
            EquilibriumKind::Coexistence => "coexistence",
        }
    }
}

/// Homogeneous steady state `(u_s, v_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub u: f64,
    pub v: f64,
    pub kind: EquilibriumKind,
    /// Max of the absolute predator and prey reaction rates at `(u, v)`.
    pub residual: f64,
}

impl Equilibrium {
    pub fn new(kin: &KineticsModel, u: f64, v: f64, kind: EquilibriumKind) -> Self {
        let (du, dv) = kin.reaction_unchecked(u, v);
        Equilibrium {
            u,
            v,
            kind,
            residual: du.abs().max(dv.abs()),
        }
    }

    pub fn extinction(kin: &KineticsModel) -> Self {
        Self::new(kin, 0.0, 0.0, EquilibriumKind::Extinction)
    }

    pub fn prey_only(kin: &KineticsModel) -> Self {
        Self::new(kin, 0.0, kin.capacity(), EquilibriumKind::PreyOnly)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    pub extinction: Equilibrium,
    pub prey_only: Equilibrium,
    /// `None` when `gamma F(K) <= theta`.
    pub coexistence: Option<Equilibrium>,
}

impl EquilibriumSet {
    pub fn all(&self) -> Vec<Equilibrium> {
        let mut out = vec![self.extinction, self.prey_only];
        out.extend(self.coexistence);
        out
    }
}

/// Extinction, prey-only and (when `gamma F(K) > theta`) coexistence states.
///
/// Builtins use the closed forms (RM only when `alpha = 0`); everything else
/// goes through [`coexistence_by_bisection`].
pub fn compute_equilibria(kin: &KineticsModel) -> Result<EquilibriumSet> {
    let extinction = Equilibrium::extinction(kin);
    let prey_only = Equilibrium::prey_only(kin);
    let coexistence = if kin.gamma_f_capacity() - kin.theta() > COEXISTENCE_MARGIN {
        let eq = match closed_form_coexistence(kin) {
            Some((u, v)) => Equilibrium::new(kin, u, v, EquilibriumKind::Coexistence),
            None => coexistence_by_bisection(kin)?
                .ok_or_else(|| Error::RootFinding("coexistence root not found".into()))?,
        };
        if !(eq.residual < RESIDUAL_TOL && eq.u > 0.0 && eq.v > 0.0) {
            return Err(Error::RootFinding(format!(
                "coexistence state ({}, {}) has residual {:e}",
                eq.u, eq.v, eq.residual
            )));
        }
        Some(eq)
    } else {
        None
    };
    Ok(EquilibriumSet {
        extinction,
        prey_only,
        coexistence,
    })
}

fn closed_form_coexistence(kin: &KineticsModel) -> Option<(f64, f64)> {
    let (g, t, a, m, k) = (kin.gamma(), kin.theta(), kin.alpha(), kin.mu(), kin.capacity());
    match kin.kind() {
        KineticsKind::LotkaVolterra => {
            let den = g * k + m * a;
            Some((m * (g * k - t) / den, k * (m * a + t) / den))
        }
        KineticsKind::RosenzweigMacArthur if a == 0.0 => {
            let lambda = kin.half_saturation();
            let v = t * lambda / (g - t);
            Some((kin.phi(v), v))
        }
        _ => None,
    }
}

/// Coexistence state from `gamma F(v) - theta - alpha phi(v) = 0` by bisection
/// on `(eps, K - eps)`, `eps = 1e-12 K`, followed by one Newton step.
///
/// Returns `Ok(None)` when `gamma F(K) <= theta`.
pub fn coexistence_by_bisection(kin: &KineticsModel) -> Result<Option<Equilibrium>> {
    if kin.gamma_f_capacity() - kin.theta() <= COEXISTENCE_MARGIN {
        return Ok(None);
    }
    let k = kin.capacity();
    let eps = 1e-12 * k;
    let g = |v: f64| kin.gamma() * kin.response(v) - kin.theta() - kin.alpha() * kin.phi(v);
    let mut v = bisect(g, eps, k - eps, 1e-15 * k)?;
    let slope = kin.gamma() * kin.response_deriv(v) - kin.alpha() * kin.phi_deriv(v);
    if slope.is_finite() && slope != 0.0 {
        let polished = v - g(v) / slope;
        if polished > 0.0 && polished < k && g(polished).abs() <= g(v).abs() {
            v = polished;
        }
    }
    Ok(Some(Equilibrium::new(kin, kin.phi(v), v, EquilibriumKind::Coexistence)))
}
