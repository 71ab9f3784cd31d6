use std::fmt;

use super::ScalarFn;
use crate::{Error, Result};

/// Evaluators for user-supplied kinetics: functional response `F`, its
/// derivative, prey growth `f` and its derivative.
#[derive(Clone)]
pub struct CustomKinetics {
    pub response: ScalarFn,
    pub response_deriv: ScalarFn,
    pub growth: ScalarFn,
    pub growth_deriv: ScalarFn,
}

impl fmt::Debug for CustomKinetics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomKinetics { .. }")
    }
}

#[derive(Debug, Clone)]
pub enum KineticsKind {
    /// `F(v) = v`, logistic prey growth.
    LotkaVolterra,
    /// `F(v) = v / (lambda + v)`, logistic prey growth.
    RosenzweigMacArthur,
    Custom(CustomKinetics),
}

/// Reaction terms of the predator-prey system.
///
/// Predator: `gamma u F(v) - theta u - alpha u^2`. Prey: `f(v) - u F(v)`.
/// Builtins use logistic growth `f(v) = mu v (1 - v/K)`.
#[derive(Debug, Clone)]
pub struct KineticsModel {
    kind: KineticsKind,
    gamma: f64,
    theta: f64,
    alpha: f64,
    mu: f64,
    capacity: f64,
    half_saturation: f64,
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {x}")))
    }
}

impl KineticsModel {
    fn validated(self) -> Result<Self> {
        positive("gamma", self.gamma)?;
        positive("theta", self.theta)?;
        positive("mu", self.mu)?;
        positive("K", self.capacity)?;
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::param("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if matches!(self.kind, KineticsKind::RosenzweigMacArthur) {
            positive("lambda", self.half_saturation)?;
        }
        Ok(self)
    }

    pub fn lotka_volterra(gamma: f64, theta: f64, alpha: f64, mu: f64, capacity: f64) -> Result<Self> {
        KineticsModel {
            kind: KineticsKind::LotkaVolterra,
            gamma,
            theta,
            alpha,
            mu,
            capacity,
            half_saturation: f64::NAN,
        }
        .validated()
    }

    pub fn rosenzweig_macarthur(
        gamma: f64,
        theta: f64,
        alpha: f64,
        mu: f64,
        capacity: f64,
        half_saturation: f64,
    ) -> Result<Self> {
        KineticsModel {
            kind: KineticsKind::RosenzweigMacArthur,
            gamma,
            theta,
            alpha,
            mu,
            capacity,
            half_saturation,
        }
        .validated()
    }

    /// `mu` and `capacity` are still required: they define the bounds checked
    /// by the growth hypothesis and the prey-only state `(0, K)`.
    pub fn custom(
        gamma: f64,
        theta: f64,
        alpha: f64,
        mu: f64,
        capacity: f64,
        evaluators: CustomKinetics,
    ) -> Result<Self> {
        KineticsModel {
            kind: KineticsKind::Custom(evaluators),
            gamma,
            theta,
            alpha,
            mu,
            capacity,
            half_saturation: f64::NAN,
        }
        .validated()
    }

    /// Parameter set used for the pattern-formation cases:
    /// `K = 4, gamma = 2, theta = 1, lambda = 1, mu = 1`, `alpha = 0`.
    pub fn pattern_cases() -> Self {
        Self::rosenzweig_macarthur(2.0, 1.0, 0.0, 1.0, 4.0, 1.0).expect("valid builtin parameters")
    }

    pub fn kind(&self) -> &KineticsKind {
        &self.kind
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, KineticsKind::Custom(_))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// `lambda`; NaN unless the kinetics are Rosenzweig-MacArthur.
    pub fn half_saturation(&self) -> f64 {
        self.half_saturation
    }

    /// Functional response `F(v)`.
    #[inline]
    pub fn response(&self, v: f64) -> f64 {
        match &self.kind {
            KineticsKind::LotkaVolterra => v,
            KineticsKind::RosenzweigMacArthur => v / (self.half_saturation + v),
            KineticsKind::Custom(c) => (c.response)(v),
        }
    }

    #[inline]
    pub fn response_deriv(&self, v: f64) -> f64 {
        match &self.kind {
            KineticsKind::LotkaVolterra => 1.0,
            KineticsKind::RosenzweigMacArthur => {
                let s = self.half_saturation + v;
                self.half_saturation / (s * s)
            }
            KineticsKind::Custom(c) => (c.response_deriv)(v),
        }
    }

    /// Prey growth `f(v)`.
    #[inline]
    pub fn growth(&self, v: f64) -> f64 {
        match &self.kind {
            KineticsKind::Custom(c) => (c.growth)(v),
            _ => self.mu * v * (1.0 - v / self.capacity),
        }
    }

    #[inline]
    pub fn growth_deriv(&self, v: f64) -> f64 {
        match &self.kind {
            KineticsKind::Custom(c) => (c.growth_deriv)(v),
            _ => self.mu * (1.0 - 2.0 * v / self.capacity),
        }
    }

    /// `phi(v) = f(v) / F(v)`, with the `v -> 0+` limit for builtins.
    pub fn phi(&self, v: f64) -> f64 {
        match &self.kind {
            KineticsKind::LotkaVolterra => self.mu * (1.0 - v / self.capacity),
            KineticsKind::RosenzweigMacArthur => {
                self.mu * (1.0 - v / self.capacity) * (self.half_saturation + v)
            }
            KineticsKind::Custom(_) => self.growth(v) / self.response(v),
        }
    }

    /// `phi'(v)`: closed form for builtins, quotient rule on the supplied
    /// evaluators otherwise.
    pub fn phi_deriv(&self, v: f64) -> f64 {
        match &self.kind {
            KineticsKind::LotkaVolterra => -self.mu / self.capacity,
            KineticsKind::RosenzweigMacArthur => {
                self.mu * (1.0 - self.half_saturation / self.capacity - 2.0 * v / self.capacity)
            }
            KineticsKind::Custom(_) => {
                let big_f = self.response(v);
                (self.growth_deriv(v) * big_f - self.growth(v) * self.response_deriv(v))
                    / (big_f * big_f)
            }
        }
    }

    /// Reaction rates `(du/dt, dv/dt)` at the point `(u, v)`.
    pub fn eval_reaction(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        if !(u >= 0.0 && v >= 0.0) {
            return Err(Error::Domain(format!(
                "reaction requires u >= 0 and v >= 0, got ({u}, {v})"
            )));
        }
        Ok(self.reaction_unchecked(u, v))
    }

    /// Same as [`eval_reaction`](Self::eval_reaction) without the sign check,
    /// for use inside the solver where round-off negativity is tolerated.
    #[inline]
    pub fn reaction_unchecked(&self, u: f64, v: f64) -> (f64, f64) {
        let big_f = self.response(v);
        let du = self.gamma * u * big_f - self.theta * u - self.alpha * u * u;
        let dv = self.growth(v) - u * big_f;
        (du, dv)
    }

    /// `gamma F(K)`, compared against `theta` by the stability regimes.
    pub fn gamma_f_capacity(&self) -> f64 {
        self.gamma * self.response(self.capacity)
    }
}
